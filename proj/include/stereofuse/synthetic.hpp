#pragma once

#include "stereofuse/datasets.hpp"

namespace stereofuse {

/// Appearance of one planar layer.
enum class Surface { textured, uniform, striped };

/// Parameters of a procedurally rendered rectified scene.
struct SceneSpec {
  int width = 160;
  int height = 120;
  double min_disparity = 4.0;
  double max_disparity = 40.0;
  int objects = 4;  ///< foreground layers in front of the background plane
  double noise_sigma = 2.0;  ///< additive intensity noise per image
  std::uint64_t seed = 1;
  /// Surface kinds assigned cyclically: background first, then each object.
  std::vector<Surface> surfaces = {Surface::textured, Surface::textured, Surface::uniform, Surface::textured,
                                   Surface::striped};
  double focal_px = 500.0;
  double baseline_m = 0.2;
};

/// Renders a layered scene of planar surfaces into both views.
///
/// Each layer carries a disparity plane d = a + b x + c y in left-image
/// coordinates and one of three surface kinds: random texture, uniform
/// intensity or vertical stripes. Both views are rendered by finding the
/// front-most layer along each pixel's line of sight, so occlusions and
/// sub-pixel disparities are exact. The ground truth is dense.
StereoSample synthesize_scene(const SceneSpec& spec, std::string name = "synthetic");

/// A pair whose right view is the left shifted by `shift` columns
/// (right(x, y) = left(x + shift, y)); columns without a source get fresh texture.
StereoSample shifted_texture_pair(int width, int height, int shift, std::uint64_t seed);

/// Uniform random 8-bit texture.
GrayImage random_texture(int width, int height, std::uint64_t seed);

}  // namespace stereofuse
