#pragma once

#include "stereofuse/core.hpp"

#include <bit>
#include <cstdint>

namespace stereofuse {

/// Census descriptors, one 64-bit word per pixel.
///
/// Bit k is set when the k-th window neighbour (row-major, centre skipped) is
/// strictly darker than the centre. Windows leaving the image read
/// edge-replicated intensities.
struct CensusImage {
  int window_radius = 0;
  Image<std::uint64_t> bits;

  int width() const { return static_cast<int>(bits.cols()); }
  int height() const { return static_cast<int>(bits.rows()); }
  /// (2r+1)^2 - 1
  int bit_count() const { return (2 * window_radius + 1) * (2 * window_radius + 1) - 1; }
};

/// Radius must be in [1, 3] so the descriptor fits in 64 bits.
CensusImage census_transform(const GrayImage& image, int window_radius, int workers = 1);

inline int hamming(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

/// Bit-vector form with explicit lengths; throws on a length mismatch.
int hamming(const std::vector<bool>& a, const std::vector<bool>& b);

/// C(x, y, d) = hamming(left(x, y), right(x - d, y)), or kCostCap when x - d < 0.
CostVolume build_cost_volume(const CensusImage& left, const CensusImage& right, int d_max,
                             int workers = 1);

}  // namespace stereofuse
