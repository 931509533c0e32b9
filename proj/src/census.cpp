#include "stereofuse/census.hpp"

namespace stereofuse {

CensusImage census_transform(const GrayImage& image, int window_radius, int workers) {
  if (window_radius < 1 || window_radius > 3) {
    throw std::invalid_argument("census window radius must be in [1, 3], got " +
                                std::to_string(window_radius));
  }
  const int w = width(image);
  const int h = height(image);
  if (w < 1 || h < 1) throw std::invalid_argument("census of an empty image");

  CensusImage out{window_radius, Image<std::uint64_t>::Zero(h, w)};
  const int r = window_radius;
  parallel_for(std::size_t(h), workers, [&](std::size_t y0, std::size_t y1) {
    for (int y = int(y0); y < int(y1); ++y) {
      for (int x = 0; x < w; ++x) {
        const int center = image(y, x);
        std::uint64_t bits = 0;
        int k = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int xx = std::clamp(x + dx, 0, w - 1);
            if (image(yy, xx) < center) bits |= std::uint64_t{1} << k;
            ++k;
          }
        }
        out.bits(y, x) = bits;
      }
    }
  });
  return out;
}

int hamming(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hamming distance of bit vectors with different lengths");
  }
  int count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) count += a[i] != b[i];
  return count;
}

CostVolume build_cost_volume(const CensusImage& left, const CensusImage& right, int d_max,
                             int workers) {
  if (left.width() != right.width() || left.height() != right.height()) {
    throw std::invalid_argument("census images differ in size");
  }
  if (left.window_radius != right.window_radius) {
    throw std::invalid_argument("census images use different window radii");
  }
  if (d_max < 0) throw std::invalid_argument("d_max must be non-negative");

  const int w = left.width();
  const int h = left.height();
  CostVolume volume(w, h, d_max, kCostCap);
  parallel_for(std::size_t(h), workers, [&](std::size_t y0, std::size_t y1) {
    for (int y = int(y0); y < int(y1); ++y) {
      const std::uint64_t* lrow = left.bits.row(y).data();
      const std::uint64_t* rrow = right.bits.row(y).data();
      for (int x = 0; x < w; ++x) {
        auto costs = volume.pixel(x, y);
        const int reachable = std::min(d_max, x);
        const std::uint64_t l = lrow[x];
        for (int d = 0; d <= reachable; ++d) {
          costs[d] = static_cast<std::uint16_t>(std::popcount(l ^ rrow[x - d]));
        }
      }
    }
  });
  return volume;
}

}  // namespace stereofuse
