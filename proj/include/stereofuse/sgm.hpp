#pragma once

#include "stereofuse/core.hpp"

#include <array>

namespace stereofuse {

/// Step between consecutive pixels of a scanline.
struct PathDirection {
  int dx = 1;
  int dy = 0;

  friend bool operator==(const PathDirection&, const PathDirection&) = default;
};

/// The 4 axis-aligned directions followed by the 4 diagonals.
inline constexpr std::array<PathDirection, 8> kPathDirections = {{
    {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1},
}};

/// First 4 or 8 entries of kPathDirections.
std::span<const PathDirection> path_directions(int num_paths);

/// Costs aggregated along every scanline running in `dir`:
///
///   L(p, d) = C(p, d) + min(L(q, d), L(q, d±1) + p1, min_i L(q, i) + p2) - min_i L(q, i)
///
/// where q is the predecessor of p. Pixels without a predecessor keep C.
AggregatedVolume aggregate_path(const CostVolume& volume, PathDirection dir, int p1, int p2,
                                int workers = 1);

/// S = sum of aggregate_path over `dirs`.
AggregatedVolume aggregate_all(const CostVolume& volume, std::span<const PathDirection> dirs, int p1,
                               int p2, int workers = 1);

/// S over the 4 or 8 directions selected by `params.num_paths`.
AggregatedVolume aggregate_all(const CostVolume& volume, const FusionParams& params, int workers = 1);

/// Winner-take-all; ties go to the lowest disparity.
DisparityMap select_disparity(const AggregatedVolume& aggregated, int workers = 1);

/// Same selection on raw costs.
DisparityMap select_disparity(const CostVolume& volume, int workers = 1);

}  // namespace stereofuse
