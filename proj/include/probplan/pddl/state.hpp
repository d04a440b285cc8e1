#pragma once

#include <cassert>
#include <memory>
#include <span>
#include <vector>

#include "probplan/pddl/ground.hpp"
#include "probplan/util/rng.hpp"

namespace probplan::pddl {

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Set of true ground atoms, stored as a bitset over the universe. Value
// type; copies are cheap at the universe sizes this project works with.
class SymbolicState {
 public:
  SymbolicState() = default;

  explicit SymbolicState(std::shared_ptr<const AtomUniverse> universe)
      : universe_(std::move(universe)),
        bits_((universe_->size() + 63) / 64, 0) {}

  SymbolicState(std::shared_ptr<const AtomUniverse> universe,
                std::span<const AtomId> true_atoms)
      : SymbolicState(std::move(universe)) {
    for (AtomId id : true_atoms) set(id);
  }

  const std::shared_ptr<const AtomUniverse>& universe() const { return universe_; }

  bool test(AtomId id) const {
    return (bits_[id >> 6] >> (id & 63)) & 1u;
  }

  void set(AtomId id) {
    assert(universe_ && id < universe_->size());
    bits_[id >> 6] |= std::uint64_t{1} << (id & 63);
  }

  void reset(AtomId id) {
    bits_[id >> 6] &= ~(std::uint64_t{1} << (id & 63));
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (std::uint64_t w : bits_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }

  bool contains_all(std::span<const AtomId> ids) const {
    for (AtomId id : ids) {
      if (!test(id)) return false;
    }
    return true;
  }

  // goal ⊆ state
  bool satisfies(const SymbolicState& goal) const {
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if ((goal.bits_[i] & ~bits_[i]) != 0) return false;
    }
    return true;
  }

  std::vector<AtomId> atom_ids() const {
    std::vector<AtomId> out;
    for (AtomId id = 0; id < universe_->size(); ++id) {
      if (test(id)) out.push_back(id);
    }
    return out;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t w : bits_) hash_combine(h, w);
    return h;
  }

  friend bool operator==(const SymbolicState& a, const SymbolicState& b) {
    return a.bits_ == b.bits_;
  }

 private:
  std::shared_ptr<const AtomUniverse> universe_;
  std::vector<std::uint64_t> bits_;
};

// STRIPS progression: (state \ del) ∪ add. Throws if Pre(a) ⊄ state.
inline SymbolicState apply_discrete(const SymbolicState& state, const Action& action) {
  if (!state.contains_all(action.pre)) {
    throw PreconditionError("precondition of " + action.to_string() +
                            " not satisfied");
  }
  SymbolicState next = state;
  for (AtomId id : action.del) next.reset(id);
  for (AtomId id : action.add) next.set(id);
  return next;
}

// Builds the initial/goal states of a parsed problem against its universe.
inline SymbolicState make_state(const std::shared_ptr<const AtomUniverse>& universe,
                                const std::vector<AtomTemplate>& atoms) {
  SymbolicState state(universe);
  for (const AtomTemplate& atom : atoms) {
    const auto id = universe->find(atom.predicate, atom.args);
    if (!id) {
      throw ValidationError("atom " + atom.predicate +
                            " is not part of the ground universe (arguments "
                            "must be distinct objects)");
    }
    state.set(*id);
  }
  return state;
}

}  // namespace probplan::pddl
