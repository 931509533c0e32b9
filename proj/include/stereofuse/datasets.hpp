#pragma once

#include "stereofuse/core.hpp"

#include <array>
#include <filesystem>
#include <stdexcept>

namespace stereofuse {

/// Malformed or unreadable dataset file. The message names the path.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(std::size_t(w) * std::size_t(h) * 3, 0) {}

  std::array<std::uint8_t, 3> at(int x, int y) const {
    const auto* p = &data[(std::size_t(y) * width + x) * 3];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, std::array<std::uint8_t, 3> rgb) {
    auto* p = &data[(std::size_t(y) * width + x) * 3];
    p[0] = rgb[0];
    p[1] = rgb[1];
    p[2] = rgb[2];
  }
};

struct Calibration {
  double focal_px = 0.0;
  double baseline_m = 0.0;
};

/// A rectified pair with ground truth. Invalid ground truth marks unmeasured pixels.
struct StereoSample {
  std::string name;
  GrayImage left;
  GrayImage right;
  DisparityMap ground_truth;
  Calibration calib;
};

enum class NoiseDomain { disparity, depth };

/// How ground truth is divided into seeds and held-out evaluation pixels.
struct SplitSpec {
  double seed_fraction = 0.15;
  double noise_fraction = 0.0;
  std::uint64_t rng_seed = 0;
  /// Multiply the disparity by (1 + u), or the depth (disparity / (1 + u)).
  NoiseDomain noise_domain = NoiseDomain::disparity;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct Split {
  SeedSet seeds;
  DisparityMap eval;
};

// ---- PFM ---------------------------------------------------------------

struct PfmHeader {
  int width = 0;
  int height = 0;
  double scale = -1.0;  ///< negative: little-endian
};

/// Grayscale "Pf" only. Non-finite samples become invalid.
DisparityMap read_pfm(const std::filesystem::path& path);
PfmHeader read_pfm_header(const std::filesystem::path& path);
/// Little-endian, bottom row first, invalid written as +inf.
void write_pfm(const DisparityMap& map, const std::filesystem::path& path);

// ---- PNG ---------------------------------------------------------------

struct PngHeader {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int channels = 0;
};

PngHeader read_png_header(const std::filesystem::path& path);

/// ITU-R 601 luma rounded to nearest: (299 R + 587 G + 114 B + 500) / 1000.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// 8-bit gray, gray+alpha, RGB, RGBA or palette PNG as grayscale.
GrayImage read_gray_png(const std::filesystem::path& path);
/// Single-channel 16-bit PNG samples.
Image<std::uint16_t> read_png16(const std::filesystem::path& path);

void write_png(const GrayImage& image, const std::filesystem::path& path);
void write_png(const Image<std::uint16_t>& image, const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

/// KITTI encoding: raw 0 is invalid, otherwise raw / 256. Values above d_max
/// are clamped to d_max.
DisparityMap read_kitti_disparity_png(const std::filesystem::path& path, int d_max = 256);

// ---- Layouts -----------------------------------------------------------

/// `cam0=[f 0 cx; ...]` and `baseline=<mm>` from a Middlebury calib.txt.
Calibration read_middlebury_calib(const std::filesystem::path& path);

/// Directory holding im0.png, im1.png, disp0.pfm and calib.txt. Ground truth
/// above d_max is treated as unmeasured.
StereoSample load_middlebury_sample(const std::filesystem::path& dir, int d_max);

/// `root` is either one sample directory or a directory of them (sorted by name).
std::vector<StereoSample> load_middlebury_dataset(const std::filesystem::path& root, int d_max);

/// Writes the Middlebury layout for `sample` into `dir`.
void write_middlebury_sample(const StereoSample& sample, const std::filesystem::path& dir);

/// `image_2/`, `image_3/` and `disp_occ_0/` holding `<id>_10.png` files.
std::vector<StereoSample> load_kitti_dataset(const std::filesystem::path& root, int d_max);

// ---- Seeds -------------------------------------------------------------

/// Uniform selection of round(seed_fraction * valid) ground-truth pixels as
/// seeds, with multiplicative noise u ~ U[-noise_fraction, noise_fraction].
/// Selection and noise use separate mt19937_64 streams derived from rng_seed.
/// Noisy disparities are clamped to [0, d_max].
Split sample_split(const DisparityMap& ground_truth, const SplitSpec& spec, int d_max);

/// f * B / Z. Throws on non-positive depth.
double depth_to_disparity(double depth_m, double focal_px, double baseline_m);

/// Depth image in meters (non-finite or <= 0 skipped) to seeds; disparities
/// above d_max are dropped.
SeedSet seeds_from_depth(const Image<float>& depth_m, double focal_px, double baseline_m, int d_max);

/// PFM in meters, or a 16-bit PNG multiplied by `png_scale` (0.001 for millimetres).
Image<float> read_depth_image(const std::filesystem::path& path, double png_scale);

/// Text format: a `<width> <height>` line, then one `x y d` line per seed.
/// Lines starting with '#' are comments.
void write_seeds(const SeedSet& seeds, const std::filesystem::path& path);
SeedSet read_seeds(const std::filesystem::path& path, int d_max);
std::string format_seeds(const SeedSet& seeds);
SeedSet parse_seeds(const std::string& text, int d_max);

}  // namespace stereofuse
