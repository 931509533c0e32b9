#pragma once

#include "stereofuse/core.hpp"

#include <array>
#include <string_view>

namespace stereofuse {

/// Pipelines selectable from the command line, in report order.
enum class Method { sgm, naive, neighborhood, diffusion, aniso_baseline };

inline constexpr std::array<Method, 5> kAllMethods = {
    Method::sgm, Method::naive, Method::neighborhood, Method::diffusion, Method::aniso_baseline};

std::string_view method_name(Method method);
/// Accepts the names `sgm | naive | neighborhood | diffusion | aniso-baseline`.
Method parse_method(std::string_view name);

/// Unnormalized Gaussian, 1 at zero.
inline double gaussian(double delta, double sigma) {
  return std::exp(-(delta * delta) / (2.0 * sigma * sigma));
}

/// Intensity-similarity weights around one seed, clipped to the image.
struct WeightWindow {
  int center_x = 0;
  int center_y = 0;
  int origin_x = 0;  ///< image x of weights(0, 0)
  int origin_y = 0;
  Image<double> weights;
};

WeightWindow weight_window(const GrayImage& guide, const Seed& seed, double sigma_r, int radius);

/// Seeds spread over the image by bilateral interpolation.
struct InterpolationField {
  DisparityMap disparity;  ///< weighted seed average, invalid beyond k_interp of every seed
  Image<double> confidence;  ///< strongest single-seed weight, in [0, 1]
  Image<double> weight_sum;  ///< sum of seed weights, for diagnostics

  int width() const { return static_cast<int>(disparity.cols()); }
  int height() const { return static_cast<int>(disparity.rows()); }
};

/// Zeroes the cost at each seed's rounded disparity. Nothing else changes.
void naive_update(CostVolume& volume, const SeedSet& seeds);

/// Seed pixels get epsilon inside the tau_d band and beta outside it. Pixels in
/// the (2 k_w + 1)^2 window of a seed get, at the seed's level, epsilon when
/// their intensity weight reaches tau_n and (1 - w) beta otherwise. Where
/// several seeds address the same cell the smallest assignment wins.
void neighborhood_update(CostVolume& volume, const SeedSet& seeds, const GrayImage& guide,
                         const FusionParams& params, int workers = 1);

/// Bilateral average of the seeds within Euclidean distance k_interp of each
/// pixel. Throws on an empty seed set.
InterpolationField interpolate_seeds(const SeedSet& seeds, const GrayImage& guide,
                                     const FusionParams& params, int workers = 1);

/// Rewrites the costs of pixels with an interpolated disparity d_v and
/// confidence W > tau_l: beta where |d - d_v| >= tau_d, otherwise epsilon when
/// W >= tau_u and (1 - W) gamma below that. Pixels with W <= tau_l keep their
/// costs unless `params.literal_low_confidence` is set, in which case every
/// level becomes gamma.
void diffusion_update(CostVolume& volume, const InterpolationField& field, const FusionParams& params,
                      int workers = 1);

/// Monocular baseline: edge-stopping 4-neighbour diffusion of the seed
/// disparities over the guide image, seeds clamped after every iteration.
/// Pixels the diffusion never reached are invalid.
DisparityMap anisotropic_baseline(const GrayImage& guide, const SeedSet& seeds, int iterations,
                                  double kappa, double lambda, int workers = 1);

}  // namespace stereofuse
