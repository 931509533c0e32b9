// Acceptance suite: one PASS / FAIL / SKIP line per criterion.

#include "fixtures.hpp"

#include "stereofuse/census.hpp"
#include "stereofuse/cli.hpp"
#include "stereofuse/eval.hpp"
#include "stereofuse/fusion.hpp"
#include "stereofuse/pipeline.hpp"
#include "stereofuse/sgm.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <tuple>

using namespace stereofuse;
using stereofuse::fixtures::TempDir;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

// ---- 1. Path aggregation vs. the recursive definition ------------------

// Literal recursion over the predecessor chain, memoized so that the
// exponential fan-out stays cheap. Works in int64 with no normalization tricks
// beyond the definition itself.
class RecursiveOracle {
 public:
  RecursiveOracle(const CostVolume& costs, PathDirection dir, int p1, int p2)
      : costs_(costs), dir_(dir), p1_(p1), p2_(p2) {}

  std::int64_t operator()(int x, int y, int d) {
    auto key = std::make_tuple(x, y, d);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const int px = x - dir_.dx;
    const int py = y - dir_.dy;
    std::int64_t value = costs_(x, y, d);
    if (px >= 0 && py >= 0 && px < costs_.width() && py < costs_.height()) {
      std::int64_t floor = std::numeric_limits<std::int64_t>::max();
      for (int k = 0; k <= costs_.d_max(); ++k) floor = std::min(floor, (*this)(px, py, k));
      std::int64_t best = std::min((*this)(px, py, d), floor + p2_);
      if (d > 0) best = std::min(best, (*this)(px, py, d - 1) + p1_);
      if (d < costs_.d_max()) best = std::min(best, (*this)(px, py, d + 1) + p1_);
      value += best - floor;
    }
    memo_.emplace(key, value);
    return value;
  }

 private:
  const CostVolume& costs_;
  PathDirection dir_;
  int p1_;
  int p2_;
  std::map<std::tuple<int, int, int>, std::int64_t> memo_;
};

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  auto below = [&](int n) { return int(rng() % std::uint64_t(n)); };
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + below(8);
    const int h = 1 + below(8);
    const int d_max = below(8);
    CostVolume costs(w, h, d_max);
    const int kind = below(3);
    for (Eigen::Index i = 0; i < costs.costs().size(); ++i) {
      std::uint16_t c = 0;
      if (kind == 0) c = std::uint16_t(below(65));
      if (kind == 1) c = std::uint16_t(below(20) == 0 ? kCostCap : below(65));
      if (kind == 2) c = std::uint16_t(below(int(kCostCap) + 1));
      costs.costs().data()[i] = c;
    }
    const int p1 = below(20);
    const int p2 = p1 + below(200);
    const int workers = 1 + trial % 3;
    for (const auto& dir : kPathDirections) {
      const auto fast = aggregate_path(costs, dir, p1, p2, workers);
      RecursiveOracle oracle(costs, dir, p1, p2);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          for (int d = 0; d <= d_max; ++d) {
            if (std::int64_t(fast(x, y, d)) != oracle(x, y, d)) ++mismatches;
          }
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = mismatches == 0 && elapsed < 5.0;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("200 volumes x 8 directions, %d mismatching cells, %.2f s (budget 5 s)", mismatches, elapsed)};
}

// ---- 2. Identical pair ---------------------------------------------------

Outcome identical_pair() {
  const auto start = Clock::now();
  const GrayImage image = random_texture(64, 64, 7);
  FusionParams params;
  const auto result = run_pipeline(Method::sgm, image, image, SeedSet{}, params, 1);
  const double elapsed = seconds_since(start);
  const int r = params.census_radius;
  int zero = 0;
  int total = 0;
  for (int y = r; y < 64 - r; ++y) {
    for (int x = r; x < 64 - r; ++x) {
      ++total;
      zero += result.disparity(y, x) == 0.0F;
    }
  }
  const double share = 100.0 * zero / total;
  const bool ok = share >= 99.0 && elapsed < 1.0;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%.2f%% of interior pixels at d=0 (need >= 99%%), %.3f s (budget 1 s)", share, elapsed)};
}

// ---- 3. Known shift ------------------------------------------------------

Outcome known_shift() {
  const int w = 128;
  const int h = 96;
  const int shift = 4;
  const auto sample = shifted_texture_pair(w, h, shift, 99);
  FusionParams params;
  params.d_max = 32;
  const auto result = run_pipeline(Method::sgm, sample.left, sample.right, SeedSet{}, params, 1);
  const int r = params.census_radius;
  int hits = 0;
  int total = 0;
  for (int y = r; y < h - r; ++y) {
    for (int x = shift + r; x < w - r; ++x) {
      ++total;
      hits += result.disparity(y, x) == float(shift);
    }
  }
  const double share = 100.0 * hits / total;
  return {share >= 95.0 ? Verdict::pass : Verdict::fail,
          fmt("%.2f%% of interior overlap pixels at d=%d (need >= 95%%)", share, shift)};
}

// ---- Desk fixtures shared by 4, 6 and 8 ---------------------------------

RunConfig desk_config(const std::filesystem::path& root) {
  RunConfig config;
  config.dataset = DatasetKind::middlebury;
  config.data = root.string();
  config.params = stereofuse::fixtures::desk_params();
  config.methods.assign(kAllMethods.begin(), kAllMethods.end());
  config.split.rng_seed = 5;
  config.timings = false;
  config.workers = 1;
  return config;
}

std::map<std::pair<Method, double>, SweepRow> means_by_cell(const std::vector<SweepRow>& rows) {
  std::map<std::pair<Method, double>, SweepRow> cells;
  for (const auto& row : rows) {
    if (row.sample == "mean") cells[{row.method, row.fraction}] = row;
  }
  return cells;
}

Outcome fusion_ordering(const std::filesystem::path& root) {
  auto config = desk_config(root);
  config.fractions = {0.025};
  config.split.noise_fraction = 0.05;
  config.methods = {Method::sgm, Method::naive, Method::neighborhood, Method::diffusion};
  const auto samples = load_samples(config);
  const auto cells = means_by_cell(bench_rows(config));
  auto err1 = [&](Method m) { return cells.at({m, 0.025}).errors[0]; };
  const double sgm = err1(Method::sgm);
  const double naive = err1(Method::naive);
  const double neighborhood = err1(Method::neighborhood);
  const double diffusion = err1(Method::diffusion);
  const bool ordered = diffusion < neighborhood && neighborhood < naive && naive <= sgm;
  const bool reduction = diffusion * 5.0 <= sgm;
  return {samples.size() >= 3 && ordered && reduction ? Verdict::pass : Verdict::fail,
          fmt("%zu samples, >1px: diffusion %.3f%% < neighborhood %.3f%% < naive %.3f%% <= sgm %.3f%%; "
              "sgm/diffusion %.1fx (need >= 5x)",
              samples.size(), diffusion, neighborhood, naive, sgm, sgm / std::max(diffusion, 1e-12))};
}

// ---- 5. KITTI protocol ---------------------------------------------------

Outcome kitti_protocol() {
  const char* root = std::getenv("KITTI_ROOT");
  if (root == nullptr || !std::filesystem::is_directory(root)) {
    return {Verdict::skip, "KITTI_ROOT not set to a KITTI 2015 training directory"};
  }
  RunConfig config;
  config.dataset = DatasetKind::kitti;
  config.data = root;
  config.params.d_max = 192;
  config.methods = {Method::sgm, Method::diffusion};
  config.fractions = {0.15};
  config.timings = false;
  const auto cells = means_by_cell(bench_rows(config));
  const double sgm = cells.at({Method::sgm, 0.15}).errors[2];
  const double diffusion = cells.at({Method::diffusion, 0.15}).errors[2];
  return {diffusion <= 0.5 * sgm ? Verdict::pass : Verdict::fail,
          fmt(">3px: diffusion %.3f%% vs sgm %.3f%% (need <= 0.5x)", diffusion, sgm)};
}

// ---- 6. Sweep monotonicity -----------------------------------------------

Outcome sweep_monotonicity(const std::filesystem::path& root) {
  auto config = desk_config(root);
  config.fractions = {0.05, 0.10, 0.15, 0.25};
  config.split.noise_fraction = 0.05;
  config.methods = {Method::neighborhood, Method::diffusion};
  const auto cells = means_by_cell(bench_rows(config));
  std::string trace;
  bool monotone = true;
  double previous = std::numeric_limits<double>::infinity();
  for (double f : config.fractions) {
    const double e = cells.at({Method::diffusion, f}).errors[0];
    monotone = monotone && e <= previous;
    previous = e;
    trace += fmt("%s%.0f%%: %.3f%%", trace.empty() ? "" : ", ", 100 * f, e);
  }
  std::string neighborhood;
  for (double f : config.fractions) {
    neighborhood += fmt("%s%.3f%%", neighborhood.empty() ? "" : ", ", cells.at({Method::neighborhood, f}).errors[0]);
  }
  return {monotone ? Verdict::pass : Verdict::fail,
          "diffusion >1px " + trace + " (non-increasing required); neighborhood " + neighborhood};
}

// ---- 7. Interpolation properties -----------------------------------------

// Direct long-double evaluation of the bilateral average at one pixel.
long double reference_interpolation(const SeedSet& seeds, const GrayImage& guide, const FusionParams& p, int x,
                                    int y, long double& weight_sum) {
  long double num = 0.0L;
  weight_sum = 0.0L;
  for (const auto& s : seeds) {
    const long double dx = s.x - x;
    const long double dy = s.y - y;
    const long double dist2 = dx * dx + dy * dy;
    if (dist2 > static_cast<long double>(p.k_interp) * p.k_interp) continue;
    const long double di = int(guide(y, x)) - int(guide(s.y, s.x));
    const long double w = std::exp(-di * di / (2.0L * p.sigma_r * p.sigma_r)) *
                          std::exp(-dist2 / (2.0L * p.sigma_d * p.sigma_d));
    num += w * s.d;
    weight_sum += w;
  }
  return num / weight_sum;
}

Outcome interpolation_properties() {
  std::mt19937_64 rng(77);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * double(rng() >> 11) * 0x1.0p-53; };
  int convex_failures = 0;
  int constant_failures = 0;
  int spot_failures = 0;
  int spots = 0;
  double worst_spot = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = 4 + int(rng() % 29);
    const int h = 4 + int(rng() % 29);
    FusionParams params;
    params.d_max = 64;
    params.k_interp = 1 + int(rng() % 12);
    params.sigma_r = uniform(2.0, 40.0);
    params.sigma_d = uniform(1.0, 10.0);
    const GrayImage guide = stereofuse::fixtures::random_gray(w, h, rng);
    const bool constant = trial % 4 == 0;
    const float constant_d = float(uniform(0.0, 64.0));
    std::vector<Seed> entries;
    const int count = 1 + int(rng() % std::uint64_t(std::max(1, w * h / 8)));
    for (int i = 0; i < count; ++i) {
      const float d = constant ? constant_d : float(uniform(0.0, 16.0));
      entries.push_back({int(rng() % std::uint64_t(w)), int(rng() % std::uint64_t(h)), d});
    }
    const SeedSet seeds(entries, w, h, params.d_max);
    const auto field = interpolate_seeds(seeds, guide, params);
    const double r2 = double(params.k_interp) * params.k_interp;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float lo = std::numeric_limits<float>::infinity();
        float hi = -lo;
        for (const auto& s : seeds) {
          if (double(s.x - x) * (s.x - x) + double(s.y - y) * (s.y - y) > r2) continue;
          lo = std::min(lo, s.d);
          hi = std::max(hi, s.d);
        }
        const float v = field.disparity(y, x);
        if (!is_valid(v)) {
          convex_failures += lo <= hi;  // a contributing seed exists, so the pixel must be valid
          continue;
        }
        if (v < lo || v > hi) ++convex_failures;
        if (constant && v != constant_d) ++constant_failures;
        if (!constant && (x + y + trial) % 7 == 0) {
          long double sum = 0.0L;
          const long double expected = reference_interpolation(seeds, guide, params, x, y, sum);
          if (sum < 1e-200L) continue;
          ++spots;
          const double error = double(std::fabs(expected - static_cast<long double>(v)));
          worst_spot = std::max(worst_spot, error);
          spot_failures += error > 1e-6;
        }
      }
    }
  }
  // Frozen values from an arbitrary-precision evaluator.
  auto two_seed = [](int intensity_step) {
    GrayImage guide = GrayImage::Constant(1, 16, 100);
    guide(0, 3) = std::uint8_t(100 + intensity_step);
    FusionParams params;
    params.sigma_d = 3.0;
    params.sigma_r = 10.0;
    params.k_interp = 10;
    const SeedSet seeds({{3, 0, 10.0F}, {12, 0, 20.0F}}, 16, 1, 256);
    return interpolate_seeds(seeds, guide, params);
  };
  const auto plain = two_seed(0);
  const auto edged = two_seed(10);
  const double frozen_plain = 11.8242552380635634;
  const double frozen_edged = 12.6894142136999512;
  const double frozen_confidence = 0.367879441171442322;
  spot_failures += std::fabs(plain.disparity(0, 6) - frozen_plain) > 1e-6;
  spot_failures += std::fabs(edged.disparity(0, 6) - frozen_edged) > 1e-6;
  spot_failures += std::fabs(edged.confidence(0, 6) - frozen_confidence) > 1e-6;
  spots += 3;
  const bool ok = convex_failures == 0 && constant_failures == 0 && spot_failures == 0;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("1000 cases: %d convexity, %d constant-seed violations; %d/%d spot values off by > 1e-6 "
              "(worst %.2e)",
              convex_failures, constant_failures, spot_failures, spots, worst_spot)};
}

// ---- 8. Determinism ------------------------------------------------------

std::string bench_csv(RunConfig config, int workers, const std::filesystem::path& out) {
  config.workers = workers;
  config.out = out.string();
  std::ostringstream log;
  execute_bench(config, "bench", log);
  std::ifstream in(out / "bench.csv", std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

Outcome determinism(const std::filesystem::path& root, const std::filesystem::path& scratch) {
  auto config = desk_config(root);
  config.fractions = {0.05, 0.15};
  config.split.noise_fraction = 0.05;
  const int max_workers = std::max(default_workers(), 8);
  const auto reference = bench_csv(config, 1, scratch / "w1");
  int differing = 0;
  for (int workers : {1, 4, max_workers}) {
    differing += bench_csv(config, workers, scratch / ("w" + std::to_string(workers))) != reference;
  }
  const bool ok = differing == 0 && !reference.empty();
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("bench.csv (%zu bytes) compared over workers {1, 4, %d} and a repeat run: %d differ", reference.size(),
              max_workers, differing)};
}

// ---- 9. Performance ------------------------------------------------------

Outcome performance() {
  SceneSpec spec;
  spec.width = 640;
  spec.height = 480;
  spec.min_disparity = 8.0;
  spec.max_disparity = 110.0;
  spec.objects = 6;
  spec.seed = 3;
  const auto sample = synthesize_scene(spec, "perf");
  FusionParams params;
  params.d_max = 128;
  SplitSpec split_spec;
  split_spec.seed_fraction = 0.15;
  const auto split = sample_split(sample.ground_truth, split_spec, params.d_max);

  auto best_of = [&](int workers, int repeats) {
    PipelineResult best;
    best.timings.total_ms = std::numeric_limits<double>::infinity();
    for (int i = 0; i < repeats; ++i) {
      auto result = run_pipeline(Method::diffusion, sample.left, sample.right, split.seeds, params, workers);
      if (result.timings.total_ms < best.timings.total_ms) best = std::move(result);
    }
    return best.timings;
  };
  const auto single = best_of(1, 2);
  const auto eight = best_of(8, 2);

  // The CSV carries the stage timings.
  SweepRow row;
  row.dataset = "perf";
  row.sample = "perf";
  row.method = Method::diffusion;
  row.timings = single;
  const auto csv = format_csv({row}, true);
  const bool reported = csv.find("ms_total") != std::string::npos &&
                        csv.find(fmt("%.3f", single.total_ms)) != std::string::npos;

  const bool ok = single.total_ms < 2000.0 && eight.total_ms < 700.0 && reported;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("640x480, d_max=128: 1 worker %.0f ms (census %.0f, agg %.0f, fusion %.0f; budget 2000), "
              "8 workers %.0f ms (budget 700) on %d hardware thread(s)",
              single.total_ms, single.census_ms, single.aggregation_ms, single.fusion_ms, eight.total_ms,
              default_workers())};
}

}  // namespace

int main() {
  TempDir scratch("acceptance");
  const auto fixtures = scratch / "middlebury";
  stereofuse::fixtures::write_desk_fixtures(fixtures);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 sgm oracle equivalence", oracle_equivalence},
      {"2 identical-pair sanity", identical_pair},
      {"3 known-shift recovery", known_shift},
      {"4 fusion ordering", [&] { return fusion_ordering(fixtures); }},
      {"5 kitti protocol", kitti_protocol},
      {"6 sweep monotonicity", [&] { return sweep_monotonicity(fixtures); }},
      {"7 interpolation properties", interpolation_properties},
      {"8 determinism", [&] { return determinism(fixtures, scratch / "determinism"); }},
      {"9 performance budget", performance},
  };

  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome{Verdict::fail, ""};
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = outcome.verdict == Verdict::pass ? "PASS" : outcome.verdict == Verdict::skip ? "SKIP" : "FAIL";
    failures += outcome.verdict == Verdict::fail;
    std::cout << tag << "  " << name << ": " << outcome.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criterion/criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
