#include "stereofuse/fusion.hpp"

namespace stereofuse {

namespace {

// Buckets seeds on a square grid so a radius query touches at most 3x3 cells.
class SeedGrid {
 public:
  SeedGrid(const SeedSet& seeds, int radius)
      : cell_(std::max(radius, 1)),
        cols_((seeds.width() + cell_ - 1) / cell_),
        rows_((seeds.height() + cell_ - 1) / cell_),
        buckets_(std::size_t(cols_) * std::size_t(rows_)) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto& s = seeds.entries()[i];
      buckets_[std::size_t(s.y / cell_) * cols_ + std::size_t(s.x / cell_)].push_back(i);
    }
  }

  // Calls `visit(index)` for every seed that may lie within `cell_` of (x, y).
  template <typename Visit>
  void near(int x, int y, Visit&& visit) const {
    const int bx = x / cell_;
    const int by = y / cell_;
    for (int gy = std::max(by - 1, 0); gy <= std::min(by + 1, rows_ - 1); ++gy) {
      for (int gx = std::max(bx - 1, 0); gx <= std::min(bx + 1, cols_ - 1); ++gx) {
        for (auto i : buckets_[std::size_t(gy) * cols_ + gx]) visit(i);
      }
    }
  }

 private:
  int cell_;
  int cols_;
  int rows_;
  std::vector<std::vector<std::size_t>> buckets_;
};

std::uint16_t to_cost(double value, double floor) {
  double clamped = std::clamp(value, floor, double(kCostCap));
  return static_cast<std::uint16_t>(std::lround(clamped));
}

void check_guide(const CostVolume& volume, const GrayImage& guide) {
  if (width(guide) != volume.width() || height(guide) != volume.height()) {
    throw std::invalid_argument("guide image size does not match the cost volume");
  }
}

void check_seeds(const CostVolume& volume, const SeedSet& seeds) {
  if (seeds.empty()) return;
  if (seeds.width() != volume.width() || seeds.height() != volume.height()) {
    throw std::invalid_argument("seed set size does not match the cost volume");
  }
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::sgm: return "sgm";
    case Method::naive: return "naive";
    case Method::neighborhood: return "neighborhood";
    case Method::diffusion: return "diffusion";
    case Method::aniso_baseline: return "aniso-baseline";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto method : kAllMethods) {
    if (method_name(method) == name) return method;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected sgm | naive | neighborhood | diffusion | aniso-baseline)");
}

WeightWindow weight_window(const GrayImage& guide, const Seed& seed, double sigma_r, int radius) {
  const int x0 = std::max(seed.x - radius, 0);
  const int y0 = std::max(seed.y - radius, 0);
  const int x1 = std::min(seed.x + radius, width(guide) - 1);
  const int y1 = std::min(seed.y + radius, height(guide) - 1);
  WeightWindow window{seed.x, seed.y, x0, y0, Image<double>(y1 - y0 + 1, x1 - x0 + 1)};
  const int center = guide(seed.y, seed.x);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      window.weights(y - y0, x - x0) = gaussian(double(int(guide(y, x)) - center), sigma_r);
    }
  }
  return window;
}

void naive_update(CostVolume& volume, const SeedSet& seeds) {
  check_seeds(volume, seeds);
  for (const auto& s : seeds) volume(s.x, s.y, round_to_level(s.d, volume.d_max())) = 0;
}

void neighborhood_update(CostVolume& volume, const SeedSet& seeds, const GrayImage& guide,
                         const FusionParams& params, int workers) {
  check_guide(volume, guide);
  check_seeds(volume, seeds);
  if (seeds.empty()) return;

  const int w = volume.width();
  const int levels = volume.levels();
  const int radius = params.k_w;

  Image<int> seed_at = Image<int>::Constant(volume.height(), w, -1);
  std::vector<int> seed_level(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& s = seeds.entries()[i];
    seed_at(s.y, s.x) = int(i);
    seed_level[i] = round_to_level(s.d, volume.d_max());
  }

  std::array<double, 256> similarity_to_cost{};
  for (int delta = 0; delta < 256; ++delta) {
    double weight = gaussian(delta, params.sigma_r);
    similarity_to_cost[delta] = weight >= params.tau_n ? params.epsilon : (1.0 - weight) * params.beta;
  }

  const SeedGrid grid(seeds, radius);
  parallel_for(std::size_t(volume.height()), workers, [&](std::size_t y0, std::size_t y1) {
    constexpr double kNone = std::numeric_limits<double>::infinity();
    std::vector<double> assigned(levels, kNone);
    std::vector<int> touched;
    touched.reserve(levels);
    for (int y = int(y0); y < int(y1); ++y) {
      for (int x = 0; x < w; ++x) {
        const int own = seed_at(y, x);
        if (own >= 0) {
          const int level = seed_level[own];
          for (int k = 0; k < levels; ++k) {
            assigned[k] = std::abs(k - level) >= params.tau_d ? params.beta : params.epsilon;
            touched.push_back(k);
          }
        }
        const int intensity = guide(y, x);
        grid.near(x, y, [&](std::size_t i) {
          const auto& s = seeds.entries()[i];
          if (int(i) == own || std::abs(s.x - x) > radius || std::abs(s.y - y) > radius) return;
          const double cost = similarity_to_cost[std::abs(intensity - int(guide(s.y, s.x)))];
          double& slot = assigned[seed_level[i]];
          if (slot == kNone) touched.push_back(seed_level[i]);
          slot = std::min(slot, cost);
        });
        if (touched.empty()) continue;
        auto costs = volume.pixel(x, y);
        for (int k : touched) {
          if (assigned[k] == kNone) continue;
          costs[k] = to_cost(assigned[k], params.epsilon);
          assigned[k] = kNone;
        }
        touched.clear();
      }
    }
  });
}

InterpolationField interpolate_seeds(const SeedSet& seeds, const GrayImage& guide,
                                     const FusionParams& params, int workers) {
  if (seeds.empty()) throw std::invalid_argument("interpolation needs at least one seed");
  if (width(guide) != seeds.width() || height(guide) != seeds.height()) {
    throw std::invalid_argument("guide image size does not match the seed set");
  }
  const int w = seeds.width();
  const int h = seeds.height();
  const int radius = params.k_interp;
  const int span = 2 * radius + 1;

  // Log-domain tables, plus their exponentials for the common case.
  std::vector<double> spatial_log(std::size_t(span) * span, 0.0);
  std::vector<int> half_width(static_cast<std::size_t>(span));
  for (int dy = -radius; dy <= radius; ++dy) {
    int reach = 0;
    while ((reach + 1) * (reach + 1) + dy * dy <= radius * radius) ++reach;
    half_width[std::size_t(dy + radius)] = reach;
    for (int dx = -radius; dx <= radius; ++dx) {
      spatial_log[std::size_t(dy + radius) * span + std::size_t(dx + radius)] =
          -double(dx * dx + dy * dy) / (2.0 * params.sigma_d * params.sigma_d);
    }
  }
  std::array<double, 256> range_log{};
  for (int delta = 0; delta < 256; ++delta) {
    range_log[delta] = -double(delta * delta) / (2.0 * params.sigma_r * params.sigma_r);
  }
  std::vector<double> spatial(spatial_log.size());
  std::transform(spatial_log.begin(), spatial_log.end(), spatial.begin(), [](double v) { return std::exp(v); });
  std::array<double, 256> range{};
  std::transform(range_log.begin(), range_log.end(), range.begin(), [](double v) { return std::exp(v); });

  InterpolationField field{invalid_disparity_map(w, h), Image<double>::Zero(h, w),
                           Image<double>::Zero(h, w)};
  Image<double> weighted = Image<double>::Zero(h, w);
  Image<std::uint8_t> reached = Image<std::uint8_t>::Zero(h, w);
  const auto& entries = seeds.entries();
  auto rows_from = [&](int y) {
    return std::lower_bound(entries.begin(), entries.end(), y, [](const Seed& s, int row) { return s.y < row; });
  };

  // Each seed scatters over its disc. Workers own row bands; every pixel sees
  // the seeds in sorted order whatever the banding.
  parallel_for(std::size_t(h), workers, [&](std::size_t band_begin, std::size_t band_end) {
    const int y0 = int(band_begin);
    const int y1 = int(band_end);
    for (auto it = rows_from(y0 - radius), stop = rows_from(y1 + radius); it != stop; ++it) {
      const Seed& s = *it;
      const int seed_intensity = guide(s.y, s.x);
      for (int y = std::max(y0, s.y - radius); y < std::min(y1, s.y + radius + 1); ++y) {
        const int dy = y - s.y;
        const int reach = half_width[std::size_t(dy + radius)];
        const int xa = std::max(0, s.x - reach);
        const int xb = std::min(w - 1, s.x + reach);
        const double* near = spatial.data() + std::size_t(dy + radius) * span + std::size_t(xa - s.x + radius);
        const std::uint8_t* intensity = &guide(y, xa);
        double* sum = &weighted(y, xa);
        double* total = &field.weight_sum(y, xa);
        double* strongest = &field.confidence(y, xa);
        std::uint8_t* hit = &reached(y, xa);
        for (int i = 0; i <= xb - xa; ++i) {
          const double weight = range[std::abs(int(intensity[i]) - seed_intensity)] * near[i];
          sum[i] += weight * s.d;
          total[i] += weight;
          strongest[i] = std::max(strongest[i], weight);
          hit[i] = 1;
        }
      }
    }

    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!reached(y, x)) continue;
        double total = field.weight_sum(y, x);
        double mean = weighted(y, x) / total;
        double strongest = field.confidence(y, x);
        if (total < 1e-250) {
          // Every weight is at or near underflow: redo the sums relative to
          // the largest log-weight.
          const int intensity = guide(y, x);
          std::vector<std::pair<double, float>> terms;
          for (auto it = rows_from(y - radius), stop = rows_from(y + radius + 1); it != stop; ++it) {
            const int dx = it->x - x;
            const int dy = it->y - y;
            if (dx * dx + dy * dy > radius * radius) continue;
            terms.emplace_back(range_log[std::abs(intensity - int(guide(it->y, it->x)))] +
                                   spatial_log[std::size_t(dy + radius) * span + std::size_t(dx + radius)],
                               it->d);
          }
          double peak = -std::numeric_limits<double>::infinity();
          for (const auto& term : terms) peak = std::max(peak, term.first);
          double relative_sum = 0.0;
          double relative_total = 0.0;
          for (const auto& [log_weight, d] : terms) {
            const double weight = std::exp(log_weight - peak);
            relative_sum += weight * d;
            relative_total += weight;
          }
          mean = relative_sum / relative_total;
          strongest = std::exp(peak);
          total = relative_total * strongest;
        }
        field.disparity(y, x) = static_cast<float>(mean);
        field.confidence(y, x) = std::clamp(strongest, 0.0, 1.0);
        field.weight_sum(y, x) = total;
      }
    }
  });
  return field;
}

void diffusion_update(CostVolume& volume, const InterpolationField& field, const FusionParams& params,
                      int workers) {
  if (field.width() != volume.width() || field.height() != volume.height()) {
    throw std::invalid_argument("interpolation field size does not match the cost volume");
  }
  const int w = volume.width();
  const int levels = volume.levels();
  const std::uint16_t out_of_band = to_cost(params.beta, params.epsilon);
  const std::uint16_t confident = to_cost(params.epsilon, params.epsilon);
  const std::uint16_t blanket = to_cost(params.gamma, params.epsilon);

  parallel_for(std::size_t(volume.height()), workers, [&](std::size_t y0, std::size_t y1) {
    for (int y = int(y0); y < int(y1); ++y) {
      for (int x = 0; x < w; ++x) {
        const float interpolated = field.disparity(y, x);
        if (!is_valid(interpolated)) continue;
        const double weight = field.confidence(y, x);
        auto costs = volume.pixel(x, y);
        if (weight <= params.tau_l) {
          if (params.literal_low_confidence) std::fill(costs.begin(), costs.end(), blanket);
          continue;
        }
        const std::uint16_t in_band =
            weight >= params.tau_u ? confident : to_cost((1.0 - weight) * params.gamma, params.epsilon);
        const int level = round_to_level(interpolated, volume.d_max());
        for (int k = 0; k < levels; ++k) {
          costs[k] = std::abs(k - level) >= params.tau_d ? out_of_band : in_band;
        }
      }
    }
  });
}

DisparityMap anisotropic_baseline(const GrayImage& guide, const SeedSet& seeds, int iterations,
                                  double kappa, double lambda, int workers) {
  if (iterations < 1) throw std::invalid_argument("anisotropic diffusion needs >= 1 iteration");
  if (!(kappa > 0.0)) throw std::invalid_argument("anisotropic diffusion needs kappa > 0");
  if (!(lambda > 0.0 && lambda <= 0.25)) {
    throw std::invalid_argument("anisotropic diffusion step must be in (0, 0.25]");
  }
  const int w = width(guide);
  const int h = height(guide);
  if (!seeds.empty() && (seeds.width() != w || seeds.height() != h)) {
    throw std::invalid_argument("guide image size does not match the seed set");
  }

  // g = exp(-(grad I / kappa)^2) towards the right and lower neighbour.
  auto conductance = [kappa](int a, int b) {
    const double t = (b - a) / kappa;
    return std::exp(-t * t);
  };
  Image<double> east = Image<double>::Zero(h, w);
  Image<double> south = Image<double>::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) east(y, x) = conductance(guide(y, x), guide(y, x + 1));
      if (y + 1 < h) south(y, x) = conductance(guide(y, x), guide(y + 1, x));
    }
  }

  Image<double> value = Image<double>::Zero(h, w);
  Image<double> mass = Image<double>::Zero(h, w);
  auto clamp_seeds = [&] {
    for (const auto& s : seeds) {
      value(s.y, s.x) = s.d;
      mass(s.y, s.x) = 1.0;
    }
  };
  clamp_seeds();

  Image<double> next_value(h, w);
  Image<double> next_mass(h, w);
  for (int it = 0; it < iterations; ++it) {
    parallel_for(std::size_t(h), workers, [&](std::size_t y0, std::size_t y1) {
      for (int y = int(y0); y < int(y1); ++y) {
        for (int x = 0; x < w; ++x) {
          double dv = 0.0;
          double dm = 0.0;
          auto pull = [&](double g, int nx, int ny) {
            dv += g * (value(ny, nx) - value(y, x));
            dm += g * (mass(ny, nx) - mass(y, x));
          };
          if (x + 1 < w) pull(east(y, x), x + 1, y);
          if (x > 0) pull(east(y, x - 1), x - 1, y);
          if (y + 1 < h) pull(south(y, x), x, y + 1);
          if (y > 0) pull(south(y - 1, x), x, y - 1);
          next_value(y, x) = value(y, x) + lambda * dv;
          next_mass(y, x) = mass(y, x) + lambda * dm;
        }
      }
    });
    value.swap(next_value);
    mass.swap(next_mass);
    clamp_seeds();
  }

  DisparityMap out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(y, x) = mass(y, x) > 0.0 ? static_cast<float>(value(y, x)) : kInvalidDisparity;
    }
  }
  return out;
}

}  // namespace stereofuse
