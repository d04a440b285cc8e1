#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "probplan/pddl/ast.hpp"

namespace probplan::pddl {

using AtomId = std::uint32_t;

struct GroundAtom {
  std::uint32_t predicate = 0;        // index into AtomUniverse::predicates()
  std::vector<std::uint16_t> args;    // indices into AtomUniverse::objects()
  AtomId id = 0;
};

// The indexed set of all ground atoms of a (domain, problem) pair. Atom ids
// are dense and ordered lexicographically by (predicate name, argument
// names), so belief vector indices are reproducible across runs.
class AtomUniverse {
 public:
  AtomUniverse(std::string domain_name, std::vector<PredicateSchema> predicates,
               std::vector<TypedName> objects, std::vector<GroundAtom> atoms)
      : domain_name_(std::move(domain_name)),
        predicates_(std::move(predicates)),
        objects_(std::move(objects)),
        atoms_(std::move(atoms)) {
    texts_.reserve(atoms_.size());
    for (const GroundAtom& atom : atoms_) {
      texts_.push_back(render(atom));
      index_.emplace(texts_.back(), atom.id);
    }
  }

  std::size_t size() const { return atoms_.size(); }
  const std::string& domain_name() const { return domain_name_; }
  const std::vector<PredicateSchema>& predicates() const { return predicates_; }
  const std::vector<TypedName>& objects() const { return objects_; }
  const GroundAtom& atom(AtomId id) const { return atoms_[id]; }
  const std::string& text(AtomId id) const { return texts_[id]; }

  const std::string& object_name(std::uint16_t idx) const {
    return objects_[idx].name;
  }

  std::optional<std::uint32_t> predicate_index(const std::string& name) const {
    for (std::uint32_t i = 0; i < predicates_.size(); ++i) {
      if (predicates_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::optional<std::uint16_t> object_index(const std::string& name) const {
    for (std::uint16_t i = 0; i < objects_.size(); ++i) {
      if (objects_[i].name == name) return i;
    }
    return std::nullopt;
  }

  // Lookup by "pred(arg1,arg2)" text; zero-arity atoms are written bare.
  std::optional<AtomId> find(const std::string& text) const {
    auto it = index_.find(text);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<AtomId> find(const std::string& predicate,
                             const std::vector<std::string>& args) const {
    std::string key = predicate;
    if (!args.empty()) {
      key.push_back('(');
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i > 0) key.push_back(',');
        key += args[i];
      }
      key.push_back(')');
    }
    return find(key);
  }

 private:
  std::string render(const GroundAtom& atom) const {
    std::string out = predicates_[atom.predicate].name;
    if (!atom.args.empty()) {
      out.push_back('(');
      for (std::size_t i = 0; i < atom.args.size(); ++i) {
        if (i > 0) out.push_back(',');
        out += objects_[atom.args[i]].name;
      }
      out.push_back(')');
    }
    return out;
  }

  std::string domain_name_;
  std::vector<PredicateSchema> predicates_;
  std::vector<TypedName> objects_;
  std::vector<GroundAtom> atoms_;
  std::vector<std::string> texts_;
  std::unordered_map<std::string, AtomId> index_;
};

// A grounded operator. pre/add/del are sorted atom-id sets. The grounder
// guarantees del ⊆ pre, add ∩ pre = ∅, add ∩ del = ∅ for every action it
// emits; the belief update rules rely on exactly these properties.
struct Action {
  std::string name;
  std::vector<std::string> args;
  std::vector<AtomId> pre;
  std::vector<AtomId> add;
  std::vector<AtomId> del;

  std::string to_string() const {
    std::string out = name;
    if (!args.empty()) {
      out.push_back('(');
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i > 0) out.push_back(',');
        out += args[i];
      }
      out.push_back(')');
    }
    return out;
  }

  friend bool operator==(const Action&, const Action&) = default;
};

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroundedProblem {
  std::shared_ptr<const AtomUniverse> universe;
  std::vector<Action> actions;
};

namespace detail {

// Enumerates argument tuples over objects, in lexicographic order by object
// name (objects are pre-sorted), with pairwise-distinct objects and
// type-compatible slots.
class TupleEnumerator {
 public:
  TupleEnumerator(const std::vector<TypedName>& objects,
                  const std::vector<std::string>& slot_types)
      : objects_(objects), slot_types_(slot_types) {}

  template <typename Fn>
  void for_each(Fn&& fn) const {
    std::vector<std::uint16_t> tuple(slot_types_.size());
    std::vector<bool> used(objects_.size(), false);
    recurse(0, tuple, used, fn);
  }

 private:
  template <typename Fn>
  void recurse(std::size_t slot, std::vector<std::uint16_t>& tuple,
               std::vector<bool>& used, Fn& fn) const {
    if (slot == slot_types_.size()) {
      fn(tuple);
      return;
    }
    for (std::uint16_t i = 0; i < objects_.size(); ++i) {
      if (used[i]) continue;
      const std::string& want = slot_types_[slot];
      if (want != kAnyType && objects_[i].type != want) continue;
      tuple[slot] = i;
      used[i] = true;
      recurse(slot + 1, tuple, used, fn);
      used[i] = false;
    }
  }

  const std::vector<TypedName>& objects_;
  const std::vector<std::string>& slot_types_;
};

inline std::vector<AtomId> sorted_unique_ids(std::vector<AtomId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

inline bool id_subset(const std::vector<AtomId>& a, const std::vector<AtomId>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool ids_intersect(const std::vector<AtomId>& a,
                          const std::vector<AtomId>& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Grounds a parsed domain/problem pair: enumerates every well-typed ground
// atom (argument objects pairwise distinct) and every well-typed action,
// both in deterministic lexicographic order.
inline GroundedProblem ground(const DomainDef& domain, const ProblemDef& problem) {
  std::vector<GroundAtom> atoms;
  // DomainDef keeps predicates sorted by name and ProblemDef keeps objects
  // sorted by name, so plain enumeration is already lexicographic.
  for (std::uint32_t p = 0; p < domain.predicates.size(); ++p) {
    const PredicateSchema& schema = domain.predicates[p];
    detail::TupleEnumerator enumerator(problem.objects, schema.parameter_types);
    enumerator.for_each([&](const std::vector<std::uint16_t>& tuple) {
      GroundAtom atom;
      atom.predicate = p;
      atom.args = tuple;
      atom.id = static_cast<AtomId>(atoms.size());
      atoms.push_back(std::move(atom));
    });
  }

  auto universe = std::make_shared<AtomUniverse>(domain.name, domain.predicates,
                                                 problem.objects, std::move(atoms));

  auto atom_id = [&](const AtomTemplate& tmpl,
                     const std::unordered_map<std::string, std::string>& binding) {
    std::vector<std::string> bound;
    bound.reserve(tmpl.args.size());
    for (const std::string& arg : tmpl.args) {
      auto it = binding.find(arg);
      bound.push_back(it != binding.end() ? it->second : arg);
    }
    return universe->find(tmpl.predicate, bound);
  };

  std::vector<Action> actions;
  for (const OperatorSchema& op : domain.operators) {
    std::vector<std::string> slot_types;
    slot_types.reserve(op.parameters.size());
    for (const TypedName& param : op.parameters) slot_types.push_back(param.type);

    detail::TupleEnumerator enumerator(problem.objects, slot_types);
    enumerator.for_each([&](const std::vector<std::uint16_t>& tuple) {
      Action action;
      action.name = op.name;
      std::unordered_map<std::string, std::string> binding;
      for (std::size_t k = 0; k < tuple.size(); ++k) {
        const std::string& obj = problem.objects[tuple[k]].name;
        binding.emplace(op.parameters[k].name, obj);
        action.args.push_back(obj);
      }
      auto collect = [&](const std::vector<AtomTemplate>& templates) {
        std::vector<AtomId> ids;
        ids.reserve(templates.size());
        for (const AtomTemplate& tmpl : templates) {
          const auto id = atom_id(tmpl, binding);
          if (!id) {
            // Substitution collides with the distinctness rule (e.g. a
            // constant argument repeats a bound parameter); skip it.
            return std::optional<std::vector<AtomId>>{};
          }
          ids.push_back(*id);
        }
        return std::optional{detail::sorted_unique_ids(std::move(ids))};
      };
      auto pre = collect(op.precondition);
      auto add = collect(op.add_effects);
      auto del = collect(op.delete_effects);
      if (!pre || !add || !del) return;
      action.pre = std::move(*pre);
      action.add = std::move(*add);
      action.del = std::move(*del);

      if (!detail::id_subset(action.del, action.pre)) {
        throw StructuralError("operator " + op.name +
                              " deletes an atom outside its precondition");
      }
      if (detail::ids_intersect(action.add, action.pre)) {
        throw StructuralError("operator " + op.name +
                              " adds an atom already in its precondition");
      }
      if (detail::ids_intersect(action.add, action.del)) {
        throw StructuralError("operator " + op.name +
                              " both adds and deletes an atom");
      }
      actions.push_back(std::move(action));
    });
  }

  return {std::move(universe), std::move(actions)};
}

}  // namespace probplan::pddl
