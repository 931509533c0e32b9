#include "stereofuse/pipeline.hpp"

#include <chrono>

namespace stereofuse {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Fuses, aggregates and selects on a volume the caller hands over.
PipelineResult fuse_and_select(Method method, CostVolume volume, const GrayImage& left,
                               const SeedSet& seeds, const FusionParams& params, int workers) {
  PipelineResult result;
  const auto begin = Clock::now();
  fuse_seeds(method, volume, left, seeds, params, workers);
  const auto fused = Clock::now();
  result.timings.fusion_ms = std::chrono::duration<double, std::milli>(fused - begin).count();
  result.disparity = select_disparity(aggregate_all(volume, params, workers), workers);
  result.timings.aggregation_ms = elapsed_ms(fused);
  result.timings.total_ms = elapsed_ms(begin);
  return result;
}

PipelineResult monocular(const GrayImage& left, const SeedSet& seeds, const FusionParams& params,
                         int workers) {
  const auto begin = Clock::now();
  PipelineResult result;
  result.disparity = anisotropic_baseline(left, seeds, params.aniso_iterations, params.aniso_kappa,
                                          params.aniso_lambda, workers);
  result.timings.fusion_ms = elapsed_ms(begin);
  result.timings.total_ms = result.timings.fusion_ms;
  return result;
}

}  // namespace

CostVolume matching_costs(const GrayImage& left, const GrayImage& right, const FusionParams& params,
                          int workers) {
  if (width(left) != width(right) || height(left) != height(right)) {
    throw std::invalid_argument("left and right images differ in size");
  }
  auto l = census_transform(left, params.census_radius, workers);
  auto r = census_transform(right, params.census_radius, workers);
  return build_cost_volume(l, r, params.d_max, workers);
}

void fuse_seeds(Method method, CostVolume& volume, const GrayImage& left, const SeedSet& seeds,
                const FusionParams& params, int workers) {
  switch (method) {
    case Method::naive:
      naive_update(volume, seeds);
      break;
    case Method::neighborhood:
      neighborhood_update(volume, seeds, left, params, workers);
      break;
    case Method::diffusion:
      if (!seeds.empty()) {
        diffusion_update(volume, interpolate_seeds(seeds, left, params, workers), params, workers);
      }
      break;
    case Method::sgm:
    case Method::aniso_baseline:
      break;
  }
}

PipelineResult run_pipeline(Method method, const GrayImage& left, const GrayImage& right,
                            const SeedSet& seeds, const FusionParams& params, int workers) {
  validate(params);
  if (method == Method::aniso_baseline) return monocular(left, seeds, params, workers);
  const auto begin = Clock::now();
  auto costs = matching_costs(left, right, params, workers);
  const double census_ms = elapsed_ms(begin);
  auto result = fuse_and_select(method, std::move(costs), left, seeds, params, workers);
  result.timings.census_ms = census_ms;
  result.timings.total_ms = elapsed_ms(begin);
  return result;
}

PipelineResult run_pipeline(Method method, const CostVolume& costs, const GrayImage& left,
                            const SeedSet& seeds, const FusionParams& params, int workers) {
  validate(params);
  if (method == Method::aniso_baseline) return monocular(left, seeds, params, workers);
  return fuse_and_select(method, costs, left, seeds, params, workers);
}

}  // namespace stereofuse
