#pragma once

#include "stereofuse/datasets.hpp"
#include "stereofuse/synthetic.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace stereofuse::fixtures {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("stereofuse_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int value = 0;
    return value;
  }
  std::filesystem::path path_;
};

inline constexpr int kDeskDisparityMax = 48;

/// Reduced-resolution Middlebury-style scenes: layered planar surfaces mixing
/// textured, uniform (wall-like) and striped regions, disparities 6..36.
inline std::vector<SceneSpec> desk_scene_specs() {
  using S = Surface;
  const std::vector<std::vector<Surface>> looks = {
      {S::uniform, S::textured, S::textured, S::striped},
      {S::textured, S::textured, S::uniform, S::textured, S::striped},
      {S::uniform, S::textured, S::uniform, S::uniform, S::textured},
      {S::textured, S::uniform, S::uniform, S::textured},
  };
  const std::uint64_t seeds[] = {11, 23, 37, 41};
  std::vector<SceneSpec> specs;
  for (std::size_t i = 0; i < looks.size(); ++i) {
    SceneSpec spec;
    spec.width = 240;
    spec.height = 180;
    spec.min_disparity = 6.0;
    spec.max_disparity = 36.0;
    spec.objects = 4;
    spec.noise_sigma = 2.0;
    spec.seed = seeds[i];
    spec.surfaces = looks[i];
    specs.push_back(spec);
  }
  return specs;
}

/// Parameters picked by a small search on the desk scenes, the way the
/// penalties are picked per dataset. A one-level agreement band avoids the
/// tie between equal in-band costs, which WTA resolves to the lowest level.
inline FusionParams desk_params() {
  FusionParams params;
  params.d_max = kDeskDisparityMax;
  params.tau_d = 1.0;
  params.sigma_r = 5.0;
  params.sigma_d = 5.0;
  return params;
}

/// Writes the desk scenes in the Middlebury layout under `root`.
inline void write_desk_fixtures(const std::filesystem::path& root) {
  int index = 0;
  for (const auto& spec : desk_scene_specs()) {
    const std::string name = "scene" + std::to_string(index++);
    write_middlebury_sample(synthesize_scene(spec, name), root / name);
  }
}

/// Random intensities in [0, 255].
inline GrayImage random_gray(int width, int height, std::mt19937_64& rng) {
  GrayImage image(height, width);
  for (Eigen::Index i = 0; i < image.size(); ++i) image.data()[i] = std::uint8_t(rng() >> 56);
  return image;
}

}  // namespace stereofuse::fixtures
