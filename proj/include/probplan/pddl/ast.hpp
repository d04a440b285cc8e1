#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace probplan::pddl {

// Untyped parameters and objects carry the root type.
inline constexpr const char* kAnyType = "object";

struct SourcePos {
  int line = 0;
  int col = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, SourcePos pos)
      : std::runtime_error(msg + " (line " + std::to_string(pos.line) +
                           ", column " + std::to_string(pos.col) + ")"),
        pos_(pos) {}

  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

class UnsupportedFeatureError : public ParseError {
 public:
  UnsupportedFeatureError(const std::string& feature, SourcePos pos)
      : ParseError("unsupported PDDL feature: " + feature, pos),
        feature_(feature) {}

  const std::string& feature() const { return feature_; }

 private:
  std::string feature_;
};

// Semantic problems: duplicate names, arity mismatches, undeclared symbols.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PredicateSchema {
  std::string name;
  std::vector<std::string> parameter_types;  // one entry per argument

  int arity() const { return static_cast<int>(parameter_types.size()); }

  friend bool operator==(const PredicateSchema&,
                         const PredicateSchema&) = default;
};

struct TypedName {
  std::string name;
  std::string type = kAnyType;

  friend bool operator==(const TypedName&, const TypedName&) = default;
  friend auto operator<=>(const TypedName&, const TypedName&) = default;
};

// A predicate applied to variables (?x) or object names. Operators use
// variables; problem init/goal sections use object names.
struct AtomTemplate {
  std::string predicate;
  std::vector<std::string> args;

  friend bool operator==(const AtomTemplate&, const AtomTemplate&) = default;
  friend auto operator<=>(const AtomTemplate&, const AtomTemplate&) = default;
};

struct OperatorSchema {
  std::string name;
  std::vector<TypedName> parameters;
  std::vector<AtomTemplate> precondition;    // sorted, positive atoms only
  std::vector<AtomTemplate> add_effects;     // sorted
  std::vector<AtomTemplate> delete_effects;  // sorted

  friend bool operator==(const OperatorSchema&,
                         const OperatorSchema&) = default;
};

struct DomainDef {
  std::string name;
  std::vector<std::string> types;            // flat list, sorted
  std::vector<PredicateSchema> predicates;   // sorted by name
  std::vector<OperatorSchema> operators;     // sorted by name

  bool typed() const { return !types.empty(); }

  const PredicateSchema* find_predicate(const std::string& pred) const {
    auto it = std::lower_bound(
        predicates.begin(), predicates.end(), pred,
        [](const PredicateSchema& s, const std::string& n) { return s.name < n; });
    return it != predicates.end() && it->name == pred ? &*it : nullptr;
  }

  friend bool operator==(const DomainDef&, const DomainDef&) = default;
};

struct ProblemDef {
  std::string name;
  std::string domain_name;
  std::vector<TypedName> objects;            // sorted by name
  std::vector<AtomTemplate> initial_state;   // ground atoms, sorted
  std::vector<AtomTemplate> goal;            // ground atoms, sorted

  const TypedName* find_object(const std::string& obj) const {
    auto it = std::lower_bound(
        objects.begin(), objects.end(), obj,
        [](const TypedName& o, const std::string& n) { return o.name < n; });
    return it != objects.end() && it->name == obj ? &*it : nullptr;
  }

  friend bool operator==(const ProblemDef&, const ProblemDef&) = default;
};

}  // namespace probplan::pddl
