#pragma once

#include <stdexcept>
#include <vector>

#include "probplan/belief/belief.hpp"

namespace probplan {

class UniverseTooLargeError : public std::runtime_error {
 public:
  UniverseTooLargeError()
      : std::runtime_error("exact joint enumeration limited to 20 atoms") {}
};

// Exact-joint reference for apply_attempt. Enumerates all 2^n symbolic
// states weighted by the product of marginals, applies the action where the
// precondition holds (leaves the state unchanged where it does not), and
// marginalizes the resulting mixture per atom. Deliberately independent of
// the factored update path so the two can be checked against each other.
inline std::vector<double> brute_force_attempt(const BeliefState& belief,
                                               const Action& action) {
  const std::size_t n = belief.size();
  if (n > 20) throw UniverseTooLargeError();

  std::vector<double> marginal(n, 0.0);
  const std::uint64_t states = std::uint64_t{1} << n;
  for (std::uint64_t s = 0; s < states; ++s) {
    double weight = 1.0;
    for (std::size_t g = 0; g < n; ++g) {
      weight *= ((s >> g) & 1u) ? belief[static_cast<AtomId>(g)]
                                : 1.0 - belief[static_cast<AtomId>(g)];
    }
    if (weight == 0.0) continue;

    bool applicable = true;
    for (AtomId id : action.pre) {
      if (((s >> id) & 1u) == 0) {
        applicable = false;
        break;
      }
    }
    std::uint64_t next = s;
    if (applicable) {
      for (AtomId id : action.del) next &= ~(std::uint64_t{1} << id);
      for (AtomId id : action.add) next |= std::uint64_t{1} << id;
    }
    for (std::size_t g = 0; g < n; ++g) {
      if ((next >> g) & 1u) marginal[g] += weight;
    }
  }
  return marginal;
}

}  // namespace probplan
