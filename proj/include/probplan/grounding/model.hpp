#pragma once

#include "probplan/belief/belief.hpp"
#include "probplan/grounding/continuous_state.hpp"

namespace probplan {

// Maps a continuous state to a belief over the ground atoms of a fixed
// universe.
struct GroundingModel {
  virtual ~GroundingModel() = default;
  virtual BeliefState ground(const ContinuousState& state) const = 0;
};

}  // namespace probplan
