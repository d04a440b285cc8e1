#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace probplan {

// Object poses, one per universe object in universe order. The held flags
// are simulator bookkeeping; grounding models see positions only.
struct ContinuousState {
  std::vector<std::array<double, 3>> positions;
  std::vector<std::uint8_t> held;  // may be empty (nothing held)

  std::size_t size() const { return positions.size(); }

  bool is_held(std::size_t i) const { return i < held.size() && held[i] != 0; }

  void validate() const {
    for (const auto& p : positions) {
      for (double c : p) {
        if (!std::isfinite(c)) {
          throw std::invalid_argument("continuous state has non-finite coordinates");
        }
      }
    }
    if (!held.empty() && held.size() != positions.size()) {
      throw std::invalid_argument("held flags do not match object count");
    }
  }
};

// Flattened position vector normalized by the workspace extents; the input
// every grounding module consumes.
inline std::vector<double> flatten_normalized(const ContinuousState& state,
                                              const std::array<double, 3>& extents) {
  std::vector<double> out;
  out.reserve(3 * state.size());
  for (const auto& p : state.positions) {
    for (int k = 0; k < 3; ++k) out.push_back(p[k] / extents[k]);
  }
  return out;
}

}  // namespace probplan
