#include "fixtures.hpp"

#include "stereofuse/census.hpp"
#include "stereofuse/sgm.hpp"

#include <gtest/gtest.h>

using namespace stereofuse;

namespace {

// Walks each scanline front to back in int64 with the recurrence written out
// case by case.
std::vector<std::int64_t> scanline_oracle(const CostVolume& c, PathDirection dir, int p1, int p2) {
  const int w = c.width();
  const int h = c.height();
  const int n = c.levels();
  std::vector<std::int64_t> out(std::size_t(w) * h * n);
  auto at = [&](int x, int y, int d) -> std::int64_t& { return out[(std::size_t(y) * w + x) * n + d]; };
  // Visiting rows (and columns) in the direction of travel guarantees the
  // predecessor is done.
  for (int i = 0; i < h; ++i) {
    const int y = dir.dy >= 0 ? i : h - 1 - i;
    for (int j = 0; j < w; ++j) {
      const int x = dir.dx >= 0 ? j : w - 1 - j;
      const int px = x - dir.dx;
      const int py = y - dir.dy;
      const bool first = px < 0 || py < 0 || px >= w || py >= h;
      std::int64_t floor = 0;
      if (!first) {
        floor = at(px, py, 0);
        for (int k = 1; k < n; ++k) floor = std::min(floor, at(px, py, k));
      }
      for (int d = 0; d < n; ++d) {
        if (first) {
          at(x, y, d) = c(x, y, d);
          continue;
        }
        std::int64_t same = at(px, py, d);
        std::int64_t down = d > 0 ? at(px, py, d - 1) + p1 : INT64_MAX;
        std::int64_t up = d + 1 < n ? at(px, py, d + 1) + p1 : INT64_MAX;
        std::int64_t jump = floor + p2;
        at(x, y, d) = c(x, y, d) + std::min({same, down, up, jump}) - floor;
      }
    }
  }
  return out;
}

CostVolume random_volume(int w, int h, int d_max, int bound, std::mt19937_64& rng) {
  CostVolume v(w, h, d_max);
  for (Eigen::Index i = 0; i < v.costs().size(); ++i) v.costs().data()[i] = std::uint16_t(rng() % std::uint64_t(bound));
  return v;
}

}  // namespace

TEST(Aggregate, HandUnrolledThreePixels) {
  CostVolume c(3, 1, 2);
  const int raw[3][3] = {{0, 5, 5}, {5, 5, 0}, {5, 5, 0}};
  for (int x = 0; x < 3; ++x) {
    for (int d = 0; d < 3; ++d) c(x, 0, d) = std::uint16_t(raw[x][d]);
  }
  // L1 = [5, 6, 2] (min 2), so L2 = C2 + [4, 3, 2] - 2.
  const auto l = aggregate_path(c, {1, 0}, 1, 2);
  EXPECT_EQ(l(1, 0, 0), 5u);
  EXPECT_EQ(l(1, 0, 1), 6u);
  EXPECT_EQ(l(1, 0, 2), 2u);
  EXPECT_EQ(l(2, 0, 0), 7u);
  EXPECT_EQ(l(2, 0, 1), 6u);
  EXPECT_EQ(l(2, 0, 2), 0u);
}

TEST(Aggregate, ZeroVolumeStaysZero) {
  CostVolume c(5, 4, 6);
  for (const auto& dir : kPathDirections) EXPECT_EQ(aggregate_path(c, dir, 7, 100).costs().maxCoeff(), 0u);
  EXPECT_EQ(aggregate_all(c, path_directions(8), 7, 100).costs().maxCoeff(), 0u);
}

TEST(Aggregate, SinglePixelIsPathsTimesCost) {
  CostVolume c(1, 1, 4);
  for (int d = 0; d <= 4; ++d) c(0, 0, d) = std::uint16_t(10 * d + 3);
  for (int paths : {4, 8}) {
    const auto s = aggregate_all(c, path_directions(paths), 7, 100);
    for (int d = 0; d <= 4; ++d) EXPECT_EQ(s(0, 0, d), std::uint32_t(paths * (10 * d + 3)));
  }
}

TEST(Aggregate, MatchesScanlineOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 1 + int(rng() % 12);
    const int h = 1 + int(rng() % 12);
    const int d_max = int(rng() % 9);
    // Alternate between small costs and capped ones so both lane widths run.
    const auto c = random_volume(w, h, d_max, trial % 2 ? 64 : 65536, rng);
    const int p1 = int(rng() % 30);
    const int p2 = p1 + int(rng() % 3000);
    for (const auto& dir : kPathDirections) {
      const auto expected = scanline_oracle(c, dir, p1, p2);
      const auto got = aggregate_path(c, dir, p1, p2, 1 + trial % 4);
      for (Eigen::Index i = 0; i < got.costs().size(); ++i) {
        ASSERT_EQ(std::int64_t(got.costs().data()[i]), expected[std::size_t(i)])
            << "trial " << trial << " dir (" << dir.dx << "," << dir.dy << ")";
      }
    }
  }
}

TEST(Aggregate, LaneWidthBoundary) {
  // Largest cost + p2 on either side of the 16-bit switch-over.
  std::mt19937_64 rng(5);
  for (int top : {32766 - 300, 32767 - 300, 32768 - 300}) {
    auto c = random_volume(9, 7, 5, 50, rng);
    c(4, 3, 2) = std::uint16_t(top);
    c(0, 0, 5) = std::uint16_t(top);
    for (const auto& dir : kPathDirections) {
      const auto expected = scanline_oracle(c, dir, 20, 300);
      const auto got = aggregate_path(c, dir, 20, 300);
      for (Eigen::Index i = 0; i < got.costs().size(); ++i) {
        ASSERT_EQ(std::int64_t(got.costs().data()[i]), expected[std::size_t(i)]) << "top " << top;
      }
    }
  }
}

TEST(Aggregate, SumIsOrderFree) {
  std::mt19937_64 rng(2);
  const auto c = random_volume(13, 9, 7, 40, rng);
  std::vector<PathDirection> dirs(kPathDirections.begin(), kPathDirections.end());
  const auto reference = aggregate_all(c, dirs, 5, 60);
  AggregatedVolume by_hand(13, 9, 7);
  for (const auto& dir : dirs) by_hand.costs() += aggregate_path(c, dir, 5, 60).costs();
  EXPECT_EQ(reference, by_hand);
  std::reverse(dirs.begin(), dirs.end());
  EXPECT_EQ(aggregate_all(c, dirs, 5, 60), reference);
  std::shuffle(dirs.begin(), dirs.end(), rng);
  EXPECT_EQ(aggregate_all(c, dirs, 5, 60), reference);
}

TEST(Aggregate, WorkerCountDoesNotMatter) {
  std::mt19937_64 rng(8);
  const auto c = random_volume(37, 29, 12, 65536, rng);
  const auto one = aggregate_all(c, path_directions(8), 7, 100, 1);
  for (int workers : {2, 3, 8, 40}) EXPECT_EQ(aggregate_all(c, path_directions(8), 7, 100, workers), one);
}

TEST(Aggregate, RejectsBadInput) {
  CostVolume c(3, 3, 2);
  EXPECT_THROW(aggregate_path(c, {2, 0}, 1, 2), std::invalid_argument);
  EXPECT_THROW(aggregate_path(c, {0, 0}, 1, 2), std::invalid_argument);
  EXPECT_THROW(aggregate_path(c, {1, 0}, 3, 2), std::invalid_argument);
  EXPECT_THROW(aggregate_path(c, {1, 0}, 1, 70000), std::invalid_argument);
  EXPECT_THROW(path_directions(6), std::invalid_argument);
}

TEST(Aggregate, LargerP2NeverAddsDiscontinuities) {
  // A single true disparity per volume, each level 4 above its neighbour,
  // with noise too small to move the minimum far.
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = 2 + int(rng() % 7);
    const int h = 1 + int(rng() % 8);
    const int d_max = 1 + int(rng() % 7);
    const int truth = int(rng() % std::uint64_t(d_max + 1));
    CostVolume c(w, h, d_max);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int d = 0; d <= d_max; ++d) c(x, y, d) = std::uint16_t(4 * std::abs(d - truth) + int(rng() % 6));
      }
    }
    const int p1 = int(rng() % 10);
    std::vector<int> previous;
    for (int p2 = p1; p2 <= p1 + 200; p2 += 5) {
      const auto map = select_disparity(aggregate_all(c, path_directions(8), p1, p2));
      std::vector<int> jumps(std::size_t(h), 0);
      for (int y = 0; y < h; ++y) {
        for (int x = 1; x < w; ++x) jumps[std::size_t(y)] += map(y, x) != map(y, x - 1);
      }
      if (!previous.empty()) {
        for (int y = 0; y < h; ++y) ASSERT_LE(jumps[std::size_t(y)], previous[std::size_t(y)]) << "trial " << trial;
      }
      previous = jumps;
    }
  }
}

TEST(Select, LowestMinimumWins) {
  AggregatedVolume s(2, 1, 2);
  const std::uint32_t a[3] = {3, 1, 7};
  const std::uint32_t b[3] = {2, 2, 5};
  for (int d = 0; d < 3; ++d) {
    s(0, 0, d) = a[d];
    s(1, 0, d) = b[d];
  }
  const auto map = select_disparity(s);
  EXPECT_EQ(map(0, 0), 1.0F);
  EXPECT_EQ(map(0, 1), 0.0F);

  CostVolume raw(1, 1, 3, 9);
  raw(0, 0, 2) = 1;
  raw(0, 0, 3) = 1;
  EXPECT_EQ(select_disparity(raw)(0, 0), 2.0F);
}

TEST(Select, IdenticalPairGivesZeroEverywhere) {
  const auto texture = random_texture(32, 32, 17);
  const auto census = census_transform(texture, 2);
  const auto volume = build_cost_volume(census, census, 16);
  const auto map = select_disparity(aggregate_all(volume, FusionParams{}));
  EXPECT_EQ(map.maxCoeff(), 0.0F);
  EXPECT_EQ(map.minCoeff(), 0.0F);
}
