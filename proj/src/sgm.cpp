#include "stereofuse/sgm.hpp"

#include <barrier>

namespace stereofuse {

namespace {

// Stands in for the missing d-1 / d+1 neighbours; far above any reachable cost
// yet safe against overflow when p1 is added.
template <typename T>
constexpr T unreachable = std::numeric_limits<T>::max() / 2;

// One recurrence step. `prev` and `cur` are padded by one slot on each side.
// T is the lane type: 16 bits whenever the path costs provably fit, which
// doubles the SIMD width.
template <typename T>
inline T step(const std::uint16_t* cost, const T* prev, T prev_min, T p1, T p2, T* cur, int levels) {
  const T jump = T(prev_min + p2);
  for (int d = 0; d < levels; ++d) {
    const T side = T(std::min(prev[d], prev[d + 2]) + p1);
    const T best = std::min(std::min(prev[d + 1], side), jump);
    cur[d + 1] = T(T(cost[d] + best) - prev_min);
  }
  T m = unreachable<T>;
  for (int d = 0; d < levels; ++d) m = std::min(m, cur[d + 1]);
  return m;
}

template <typename T>
inline T start(const std::uint16_t* cost, T* cur, int levels) {
  T m = unreachable<T>;
  for (int d = 0; d < levels; ++d) {
    cur[d + 1] = T(cost[d]);
    m = std::min(m, cur[d + 1]);
  }
  return m;
}

// Horizontal scanlines are independent rows. Both directions run back to back
// on a row while its sums are still in cache.
// Adds (or with `assign`, stores) one path's costs into a pixel's sum.
template <typename T>
inline void emit(const T* path, std::uint32_t* sum, int levels, bool assign) {
  if (assign) {
    for (int d = 0; d < levels; ++d) sum[d] = path[d];
  } else {
    for (int d = 0; d < levels; ++d) sum[d] += path[d];
  }
}

template <typename T>
void sweep_rows(const CostVolume& volume, std::span<const int> steps, T p1, T p2, AggregatedVolume& out,
                bool assign, int workers) {
  const int w = volume.width();
  const int levels = volume.levels();
  parallel_for(std::size_t(volume.height()), workers, [&](std::size_t y0, std::size_t y1) {
    std::vector<T> a(levels + 2, unreachable<T>), b(levels + 2, unreachable<T>);
    for (int y = int(y0); y < int(y1); ++y) {
      for (std::size_t k = 0; k < steps.size(); ++k) {
        const int dx = steps[k];
        const bool store = assign && k == 0;
        T* prev = a.data();
        T* cur = b.data();
        int x = dx > 0 ? 0 : w - 1;
        T prev_min = start(volume.pixel(x, y).data(), prev, levels);
        emit(prev + 1, out.pixel(x, y).data(), levels, store);
        for (x += dx; x >= 0 && x < w; x += dx) {
          prev_min = step(volume.pixel(x, y).data(), prev, prev_min, p1, p2, cur, levels);
          emit(cur + 1, out.pixel(x, y).data(), levels, store);
          std::swap(prev, cur);
        }
      }
    }
  });
}

// Directions that share a vertical step (all dy = +1 or all dy = -1) advance
// one image row at a time, so they are swept together and their sum is added
// to the output once per pixel. Workers split each row into column ranges and
// meet at a barrier between rows.
template <typename T>
void sweep_columns(const CostVolume& volume, std::span<const PathDirection> dirs, T p1, T p2,
                   AggregatedVolume& out, bool assign, int workers) {
  const int w = volume.width();
  const int h = volume.height();
  const int levels = volume.levels();
  const int dy = dirs.front().dy;
  const std::size_t stride = std::size_t(levels) + 2;
  const std::size_t n = dirs.size();

  struct Lane {
    std::vector<T> prev_row, cur_row, prev_min, cur_min;
  };
  std::vector<Lane> lanes(n);
  for (auto& lane : lanes) {
    lane.prev_row.assign(stride * w, unreachable<T>);
    lane.cur_row.assign(stride * w, unreachable<T>);
    lane.prev_min.assign(w, 0);
    lane.cur_min.assign(w, 0);
  }

  const int first = dy > 0 ? 0 : h - 1;
  auto process = [&](int y, int x0, int x1) {
    for (int x = x0; x < x1; ++x) {
      const std::uint16_t* cost = volume.pixel(x, y).data();
      std::uint32_t* sum = out.pixel(x, y).data();
      for (std::size_t k = 0; k < n; ++k) {
        Lane& lane = lanes[k];
        T* cur = lane.cur_row.data() + stride * x;
        const int px = x - dirs[k].dx;
        if (y == first || px < 0 || px >= w) {
          lane.cur_min[x] = start(cost, cur, levels);
        } else {
          lane.cur_min[x] = step(cost, lane.prev_row.data() + stride * px, lane.prev_min[px], p1, p2, cur, levels);
        }
        emit(cur + 1, sum, levels, assign && k == 0);
      }
    }
  };
  auto advance = [&]() noexcept {
    for (auto& lane : lanes) {
      std::swap(lane.prev_row, lane.cur_row);
      std::swap(lane.prev_min, lane.cur_min);
    }
  };

  const int chunks = std::clamp(workers, 1, w);
  if (chunks == 1) {
    for (int i = 0; i < h; ++i) {
      process(first + i * dy, 0, w);
      advance();
    }
    return;
  }

  std::barrier sync(chunks, advance);
  parallel_for(std::size_t(w), chunks, [&](std::size_t x0, std::size_t x1) {
    for (int i = 0; i < h; ++i) {
      process(first + i * dy, int(x0), int(x1));
      sync.arrive_and_wait();
    }
  });
}

void check_penalties(int p1, int p2) {
  if (p1 < 0 || p1 > p2) throw std::invalid_argument("penalties must satisfy 0 <= p1 <= p2");
  if (p2 > std::numeric_limits<std::uint16_t>::max()) throw std::invalid_argument("p2 exceeds 65535");
}

// Sums every path in `dirs` into `out`, whose prior contents are ignored.
void accumulate_paths(const CostVolume& volume, std::span<const PathDirection> dirs, int p1, int p2,
                      AggregatedVolume& out, int workers) {
  if (dirs.empty()) {
    out.costs().setZero();
    return;
  }
  check_penalties(p1, p2);
  std::vector<int> horizontal;
  std::vector<PathDirection> down;
  std::vector<PathDirection> up;
  for (const auto& dir : dirs) {
    if (std::abs(dir.dx) > 1 || std::abs(dir.dy) > 1 || (dir.dx == 0 && dir.dy == 0)) {
      throw std::invalid_argument("path direction components must be in {-1,0,1} and not both 0");
    }
    if (dir.dy == 0) horizontal.push_back(dir.dx);
    if (dir.dy > 0) down.push_back(dir);
    if (dir.dy < 0) up.push_back(dir);
  }
  auto run = [&]<typename T>(T) {
    if (!horizontal.empty()) sweep_rows(volume, horizontal, T(p1), T(p2), out, true, workers);
    if (!down.empty()) sweep_columns(volume, down, T(p1), T(p2), out, horizontal.empty(), workers);
    if (!up.empty()) sweep_columns(volume, up, T(p1), T(p2), out, horizontal.empty() && down.empty(), workers);
  };
  // Path costs never exceed max cost + p2, and one step adds at most twice
  // that before subtracting, so 16-bit lanes are exact below this bound.
  const int max_cost = int(volume.costs().maxCoeff());
  if (max_cost + p2 < int(unreachable<std::uint16_t>)) {
    run(std::uint16_t{});
  } else {
    run(std::uint32_t{});
  }
}

template <typename Cost>
DisparityMap winner_take_all(const Volume<Cost>& volume, int workers) {
  DisparityMap map(volume.height(), volume.width());
  const int w = volume.width();
  const int levels = volume.levels();
  parallel_for(std::size_t(volume.height()), workers, [&](std::size_t y0, std::size_t y1) {
    for (int y = int(y0); y < int(y1); ++y) {
      for (int x = 0; x < w; ++x) {
        const Cost* cost = volume.pixel(x, y).data();
        int best = 0;
        for (int d = 1; d < levels; ++d) {
          if (cost[d] < cost[best]) best = d;
        }
        map(y, x) = static_cast<float>(best);
      }
    }
  });
  return map;
}

}  // namespace

std::span<const PathDirection> path_directions(int num_paths) {
  if (num_paths != 4 && num_paths != 8) throw std::invalid_argument("num_paths must be 4 or 8");
  return std::span<const PathDirection>(kPathDirections).first(std::size_t(num_paths));
}

AggregatedVolume aggregate_path(const CostVolume& volume, PathDirection dir, int p1, int p2,
                                int workers) {
  auto out = AggregatedVolume::uninitialized(volume.width(), volume.height(), volume.d_max());
  accumulate_paths(volume, std::span<const PathDirection>(&dir, 1), p1, p2, out, workers);
  return out;
}

AggregatedVolume aggregate_all(const CostVolume& volume, std::span<const PathDirection> dirs, int p1,
                               int p2, int workers) {
  auto sum = AggregatedVolume::uninitialized(volume.width(), volume.height(), volume.d_max());
  accumulate_paths(volume, dirs, p1, p2, sum, workers);
  return sum;
}

AggregatedVolume aggregate_all(const CostVolume& volume, const FusionParams& params, int workers) {
  return aggregate_all(volume, path_directions(params.num_paths), params.p1, params.p2, workers);
}

DisparityMap select_disparity(const AggregatedVolume& aggregated, int workers) {
  return winner_take_all(aggregated, workers);
}

DisparityMap select_disparity(const CostVolume& volume, int workers) {
  return winner_take_all(volume, workers);
}

}  // namespace stereofuse
