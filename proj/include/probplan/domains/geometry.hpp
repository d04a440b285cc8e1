#pragma once

#include <array>
#include <cmath>
#include <cstdlib>

namespace probplan::geom {

// Tabletop layout. Blocks are 5 cm cubes on a 1 m x 1 m workspace; free
// towers stand on a 0.15 m grid; a held object sits at the fixed hand pose.
inline constexpr double kBlockSize = 0.05;
inline constexpr double kGridStep = 0.15;
inline constexpr double kGridOrigin = 0.075;
inline constexpr int kGridSide = 6;
inline constexpr int kTableSlots = kGridSide * kGridSide;
inline constexpr std::array<double, 3> kHandPose{0.5, 0.5, 0.5};
inline constexpr std::array<double, 3> kWorkspace{1.0, 1.0, 0.6};

// Containers for the sorting domain sit along the right edge, clear of the
// table grid (grid x stops at 0.825).
inline constexpr int kContainerCount = 4;
inline constexpr double kContainerX = 0.95;
inline constexpr double kContainerRadius = 0.06;

inline std::array<double, 3> table_slot_pose(int slot) {
  const int ix = slot % kGridSide;
  const int iy = slot / kGridSide;
  return {kGridOrigin + kGridStep * ix, kGridOrigin + kGridStep * iy,
          kBlockSize / 2.0};
}

inline std::array<double, 3> container_pose(int container) {
  return {kContainerX, 0.125 + 0.25 * container, kBlockSize / 2.0};
}

// Deterministic within-container offset so co-located objects stay distinct.
inline std::array<double, 3> container_item_pose(int container, int object_index) {
  auto p = container_pose(container);
  p[0] += 0.02 * ((object_index % 3) - 1);
  p[1] += 0.02 * (((object_index / 3) % 3) - 1);
  return p;
}

inline bool near(const std::array<double, 3>& a, const std::array<double, 3>& b,
                 double tol) {
  return std::abs(a[0] - b[0]) <= tol && std::abs(a[1] - b[1]) <= tol &&
         std::abs(a[2] - b[2]) <= tol;
}

inline int container_of(const std::array<double, 3>& pose) {
  for (int c = 0; c < kContainerCount; ++c) {
    const auto center = container_pose(c);
    if (std::abs(pose[0] - center[0]) <= kContainerRadius &&
        std::abs(pose[1] - center[1]) <= kContainerRadius) {
      return c;
    }
  }
  return -1;
}

}  // namespace probplan::geom
