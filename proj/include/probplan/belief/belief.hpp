#pragma once

#include <cassert>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "probplan/pddl/state.hpp"

namespace probplan {

using pddl::Action;
using pddl::AtomId;
using pddl::AtomUniverse;
using pddl::SymbolicState;

class UniverseMismatchError : public std::runtime_error {
 public:
  UniverseMismatchError() : std::runtime_error("belief universes do not match") {}
};

// Factored belief over ground atoms: one Bernoulli marginal per atom id,
// under conditional independence. Value type, cheap to copy.
class BeliefState {
 public:
  BeliefState() = default;

  explicit BeliefState(std::shared_ptr<const AtomUniverse> universe, double fill = 0.0)
      : universe_(std::move(universe)), probs_(universe_->size(), fill) {
    assert(fill >= 0.0 && fill <= 1.0);
  }

  static BeliefState from_symbolic(const SymbolicState& state) {
    BeliefState belief(state.universe());
    for (AtomId id = 0; id < belief.size(); ++id) {
      if (state.test(id)) belief.probs_[id] = 1.0;
    }
    return belief;
  }

  const std::shared_ptr<const AtomUniverse>& universe() const { return universe_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](AtomId id) const { return probs_[id]; }
  std::span<const double> probs() const { return probs_; }

  void set(AtomId id, double p) {
    if (p < 0.0 || p > 1.0 || !std::isfinite(p)) {
      throw std::invalid_argument("marginal probability outside [0,1]");
    }
    probs_[id] = p;
  }

  bool same_universe(const BeliefState& other) const {
    return universe_ == other.universe_ ||
           (universe_ && other.universe_ && universe_->size() == other.universe_->size());
  }

  friend bool operator==(const BeliefState& a, const BeliefState& b) {
    return a.probs_ == b.probs_;
  }

 private:
  friend BeliefState apply_attempt(const BeliefState&, const Action&);

  std::shared_ptr<const AtomUniverse> universe_;
  std::vector<double> probs_;
};

// Probability that the action's precondition holds: the product of the
// precondition atoms' marginals. Empty precondition gives 1.
inline double applicability(const BeliefState& belief, const Action& action) {
  double p = 1.0;
  for (AtomId id : action.pre) p *= belief[id];
  return p;
}

// Shifts the belief by an *attempt* of the action: with probability
// A = applicability the action succeeds and applies its effects, otherwise
// the state is unchanged. Per atom:
//   g ∈ add:       p' = A + (1-A)·p
//   g ∈ del:       p' = p - A        (valid because del ⊆ pre makes A ≤ p)
//   g unaffected:  p' = p
// The fma keeps the add case from rounding above 1.
inline BeliefState apply_attempt(const BeliefState& belief, const Action& action) {
  const double app = applicability(belief, action);
  BeliefState next = belief;
  for (AtomId id : action.add) {
    next.probs_[id] = std::fma(1.0 - app, belief[id], app);
  }
  for (AtomId id : action.del) {
    next.probs_[id] = belief[id] - app;
  }
#ifndef NDEBUG
  for (double p : next.probs_) assert(p >= -1e-9 && p <= 1.0 + 1e-9);
#endif
  return next;
}

// Posterior marginals after observing that an attempt of the action failed,
// i.e. that not all precondition atoms were true. Per precondition atom g
// with marginal p and R = product of the other precondition marginals:
//   P(g | failure) = p·(1 - R) / (1 - p·R).
// Atoms outside the precondition are unaffected (conditional independence;
// the result is the factored approximation of the exact posterior). A
// certainly-applicable precondition is contradictory evidence and a
// certainly-failing one is vacuous; both leave the belief unchanged.
inline BeliefState condition_on_failure(const BeliefState& belief, const Action& action) {
  const std::size_t k = action.pre.size();
  if (k == 0) return belief;
  std::vector<double> prefix(k + 1, 1.0), suffix(k + 1, 1.0);
  for (std::size_t i = 0; i < k; ++i) {
    prefix[i + 1] = prefix[i] * belief[action.pre[i]];
  }
  for (std::size_t i = k; i > 0; --i) {
    suffix[i - 1] = suffix[i] * belief[action.pre[i - 1]];
  }
  const double applicable = prefix[k];
  if (applicable <= 0.0 || applicable >= 1.0 - 1e-12) return belief;

  BeliefState next = belief;
  for (std::size_t i = 0; i < k; ++i) {
    const double p = belief[action.pre[i]];
    const double rest = prefix[i] * suffix[i + 1];
    next.set(action.pre[i], p * (1.0 - rest) / (1.0 - p * rest));
  }
  return next;
}

// Σ_g |a[g] - b[g]|
inline double l1_distance(const BeliefState& a, const BeliefState& b) {
  if (!a.same_universe(b)) throw UniverseMismatchError();
  double sum = 0.0;
  for (AtomId id = 0; id < a.size(); ++id) sum += std::abs(a[id] - b[id]);
  return sum;
}

// Distance used by the continuous planner's goal test. The weighted variant
// scales each atom by the goal's confidence |2·g-1|, so atoms the goal is
// uncertain about contribute less.
inline double goal_distance(const BeliefState& belief, const BeliefState& goal,
                            bool weighted = false) {
  if (!weighted) return l1_distance(belief, goal);
  if (!belief.same_universe(goal)) throw UniverseMismatchError();
  double sum = 0.0;
  for (AtomId id = 0; id < belief.size(); ++id) {
    sum += std::abs(2.0 * goal[id] - 1.0) * std::abs(belief[id] - goal[id]);
  }
  return sum;
}

}  // namespace probplan
