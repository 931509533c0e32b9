#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace stereofuse {

/// Dense row-major raster. Row index is y, column index is x.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit intensities; arithmetic on them is always done in `int`.
using GrayImage = Image<std::uint8_t>;

/// Per-pixel disparity, `kInvalidDisparity` where unknown.
using DisparityMap = Image<float>;

/// Reserved marker above every representable disparity.
inline constexpr float kInvalidDisparity = std::numeric_limits<float>::infinity();

/// Largest storable matching cost. Also used for out-of-range matches.
inline constexpr std::uint16_t kCostCap = std::numeric_limits<std::uint16_t>::max();

inline bool is_valid(float disparity) { return std::isfinite(disparity); }

template <typename Derived>
int width(const Eigen::DenseBase<Derived>& image) { return static_cast<int>(image.cols()); }

template <typename Derived>
int height(const Eigen::DenseBase<Derived>& image) { return static_cast<int>(image.rows()); }

/// An all-invalid disparity map of the given size.
DisparityMap invalid_disparity_map(int width, int height);

/// Number of valid entries.
std::size_t count_valid(const DisparityMap& map);

/// Nearest integer disparity level, halves rounding down, clamped to [0, d_max].
int round_to_level(double disparity, int d_max);

/// Matching costs over (pixel, disparity level).
///
/// Storage is a (width*height) x (d_max+1) row-major array, so the costs of one
/// pixel are contiguous. Level 0 is a valid disparity. Immutable through a
/// const reference; mutation requires exclusive access.
template <typename Cost>
class Volume {
 public:
  using Scalar = Cost;
  using Storage = Eigen::Array<Cost, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Volume() = default;
  Volume(int width, int height, int d_max, Cost fill = Cost{0})
      : width_(width), height_(height), d_max_(d_max) {
    if (width < 1 || height < 1 || d_max < 0) {
      throw std::invalid_argument("volume dimensions must be positive");
    }
    costs_.setConstant(static_cast<Eigen::Index>(width) * height, d_max + 1, fill);
  }

  /// Contents are indeterminate until written.
  static Volume uninitialized(int width, int height, int d_max) {
    if (width < 1 || height < 1 || d_max < 0) {
      throw std::invalid_argument("volume dimensions must be positive");
    }
    Volume v;
    v.width_ = width;
    v.height_ = height;
    v.d_max_ = d_max;
    v.costs_.resize(static_cast<Eigen::Index>(width) * height, d_max + 1);
    return v;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int d_max() const { return d_max_; }
  int levels() const { return d_max_ + 1; }

  Cost& operator()(int x, int y, int d) { return costs_(index(x, y), d); }
  Cost operator()(int x, int y, int d) const { return costs_(index(x, y), d); }

  std::span<Cost> pixel(int x, int y) { return {costs_.data() + offset(x, y), std::size_t(levels())}; }
  std::span<const Cost> pixel(int x, int y) const {
    return {costs_.data() + offset(x, y), std::size_t(levels())};
  }

  Storage& costs() { return costs_; }
  const Storage& costs() const { return costs_; }

  bool same_shape(int width, int height, int d_max) const {
    return width_ == width && height_ == height && d_max_ == d_max;
  }
  template <typename Other>
  bool same_shape(const Volume<Other>& other) const {
    return same_shape(other.width(), other.height(), other.d_max());
  }

  friend bool operator==(const Volume& a, const Volume& b) {
    return a.same_shape(b) && (a.costs_ == b.costs_).all();
  }

 private:
  Eigen::Index index(int x, int y) const { return static_cast<Eigen::Index>(y) * width_ + x; }
  std::size_t offset(int x, int y) const { return std::size_t(index(x, y)) * std::size_t(levels()); }

  int width_ = 0;
  int height_ = 0;
  int d_max_ = 0;
  Storage costs_;
};

/// Raw matching costs in [0, kCostCap].
using CostVolume = Volume<std::uint16_t>;
/// Path-summed costs; wide enough for 8 paths of capped costs plus penalties.
using AggregatedVolume = Volume<std::uint32_t>;

/// A sparse range measurement expressed as a disparity.
struct Seed {
  int x = 0;
  int y = 0;
  float d = 0.0F;

  friend bool operator==(const Seed&, const Seed&) = default;
};

/// Validated, duplicate-free seed list bound to an image size.
class SeedSet {
 public:
  SeedSet() = default;

  /// Checks bounds and disparity range; a later entry for the same pixel
  /// replaces an earlier one. Entries are kept sorted by (y, x).
  SeedSet(std::vector<Seed> entries, int width, int height, int d_max);

  const std::vector<Seed>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int width() const { return width_; }
  int height() const { return height_; }
  int d_max() const { return d_max_; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<Seed> entries_;
  int width_ = 0;
  int height_ = 0;
  int d_max_ = 0;
};

/// Every tunable of the pipeline. Cost-valued fields are in cost units.
struct FusionParams {
  int p1 = 7;
  int p2 = 100;
  double beta = kCostCap / 2;
  double epsilon = 0.0;
  double gamma = kCostCap / 2;
  double tau_d = 2.0;
  double tau_n = 0.5;
  double tau_l = 0.1;
  double tau_u = 0.9;
  double sigma_r = 10.0;
  double sigma_d = 7.5;
  int k_w = 7;
  int k_interp = 15;
  int d_max = 256;
  int num_paths = 8;
  int census_radius = 2;
  // Monocular baseline.
  int aniso_iterations = 500;
  double aniso_kappa = 10.0;
  double aniso_lambda = 0.2;
  // Apply gamma to every level of low-confidence pixels instead of keeping
  // their stereo costs.
  bool literal_low_confidence = false;

  friend bool operator==(const FusionParams&, const FusionParams&) = default;
};

/// First violated constraint, or nullopt when the parameters are usable.
std::optional<std::string> validation_error(const FusionParams& params);

/// Throws std::invalid_argument carrying `validation_error`.
void validate(const FusionParams& params);

/// Ordered `key = value` pairs. Lines starting with '#' are comments.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
std::string format_key_values(const KeyValues& values);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);
std::string format_number(float value);

/// Applies every recognized key to `params`; unknown keys are ignored so the
/// same file can carry run settings. Throws on malformed numbers.
void apply_params(const KeyValues& values, FusionParams& params);
KeyValues params_to_key_values(const FusionParams& params);

/// Names of all FusionParams keys, in serialization order.
const std::vector<std::string>& param_keys();

std::string serialize_params(const FusionParams& params);
FusionParams parse_params(const std::string& text);

/// Number of workers to use when the caller asks for "all".
int default_workers();

/// Runs `body(begin, end)` over contiguous chunks of [0, count) on up to
/// `workers` threads. Chunk boundaries depend only on `count` and `workers`.
template <typename Body>
void parallel_for(std::size_t count, int workers, Body&& body) {
  if (count == 0) return;
  std::size_t chunks = std::clamp<std::size_t>(std::size_t(std::max(workers, 1)), 1, count);
  if (chunks == 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(chunks - 1);
  std::size_t step = count / chunks;
  std::size_t extra = count % chunks;
  std::size_t begin = 0;
  std::size_t first_end = step + (extra > 0 ? 1 : 0);
  begin = first_end;
  for (std::size_t c = 1; c < chunks; ++c) {
    std::size_t end = begin + step + (c < extra ? 1 : 0);
    threads.emplace_back([&body, begin, end] { body(begin, end); });
    begin = end;
  }
  body(std::size_t{0}, first_end);
}

}  // namespace stereofuse
