#pragma once

#include "stereofuse/census.hpp"
#include "stereofuse/fusion.hpp"
#include "stereofuse/sgm.hpp"

#include <chrono>

namespace stereofuse {

/// Wall-clock time per stage in milliseconds.
struct StageTimings {
  double census_ms = 0.0;  ///< census transform + cost volume
  double aggregation_ms = 0.0;  ///< path aggregation + selection
  double fusion_ms = 0.0;  ///< seed interpolation + volume update
  double total_ms = 0.0;
};

struct PipelineResult {
  DisparityMap disparity;
  StageTimings timings;
};

/// Raw census costs for a rectified pair.
CostVolume matching_costs(const GrayImage& left, const GrayImage& right, const FusionParams& params,
                          int workers = 1);

/// Applies the seed update of `method` to `volume`; sgm and aniso-baseline
/// leave it untouched.
void fuse_seeds(Method method, CostVolume& volume, const GrayImage& left, const SeedSet& seeds,
                const FusionParams& params, int workers = 1);

/// Full pipeline for one method. The left image guides every seed update.
PipelineResult run_pipeline(Method method, const GrayImage& left, const GrayImage& right,
                            const SeedSet& seeds, const FusionParams& params, int workers = 1);

/// Same, reusing a precomputed cost volume (copied, not modified).
PipelineResult run_pipeline(Method method, const CostVolume& costs, const GrayImage& left,
                            const SeedSet& seeds, const FusionParams& params, int workers = 1);

}  // namespace stereofuse
