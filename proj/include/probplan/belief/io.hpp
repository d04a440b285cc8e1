#pragma once

#include <json.hpp>
#include <string>

#include "probplan/belief/belief.hpp"

namespace probplan {

// Belief vectors serialize as {"atom": probability} maps with zero entries
// omitted. nlohmann::json orders keys, so the output is deterministic.
inline nlohmann::json belief_to_json(const BeliefState& belief) {
  nlohmann::json out = nlohmann::json::object();
  const auto& universe = *belief.universe();
  for (AtomId id = 0; id < belief.size(); ++id) {
    if (belief[id] != 0.0) out[universe.text(id)] = belief[id];
  }
  return out;
}

inline BeliefState belief_from_json(const nlohmann::json& j,
                                    std::shared_ptr<const AtomUniverse> universe) {
  if (!j.is_object()) {
    throw std::invalid_argument("belief JSON must be an object of atom -> probability");
  }
  BeliefState belief(std::move(universe));
  for (const auto& [key, value] : j.items()) {
    const auto id = belief.universe()->find(key);
    if (!id) {
      throw std::invalid_argument("unknown atom in belief JSON: " + key);
    }
    if (!value.is_number()) {
      throw std::invalid_argument("probability for " + key + " is not a number");
    }
    belief.set(*id, value.get<double>());
  }
  return belief;
}

}  // namespace probplan
