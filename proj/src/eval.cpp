#include "stereofuse/eval.hpp"

#include <json.hpp>

#include <cstdio>
#include <tuple>

namespace stereofuse {

ErrorReport error_rates(const DisparityMap& estimate, const DisparityMap& eval,
                        std::span<const double> thresholds, bool relative) {
  if (estimate.rows() != eval.rows() || estimate.cols() != eval.cols()) {
    throw std::invalid_argument("estimate and ground truth differ in size");
  }
  ErrorReport report;
  report.thresholds.assign(thresholds.begin(), thresholds.end());
  std::vector<std::size_t> outliers(thresholds.size(), 0);
  for (Eigen::Index i = 0; i < eval.size(); ++i) {
    const float truth = eval.data()[i];
    if (!is_valid(truth)) continue;
    ++report.evaluated;
    const float guess = estimate.data()[i];
    const double error = is_valid(guess) ? std::abs(double(guess) - double(truth))
                                         : std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      bool bad = error > thresholds[t];
      if (relative) bad = bad && error > 0.05 * std::abs(double(truth));
      outliers[t] += bad;
    }
  }
  if (report.evaluated == 0) throw std::invalid_argument("no evaluable ground-truth pixels");
  for (auto count : outliers) report.percentages.push_back(100.0 * double(count) / double(report.evaluated));
  return report;
}

std::vector<SweepRow> sample_sweep(const StereoSample& sample, const SweepOptions& options) {
  std::vector<SweepRow> rows;
  if (options.methods.empty()) return rows;
  for (double fraction : options.fractions) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("sweep fractions must lie in (0, 1)");
  }
  validate(options.params);

  const bool stereo = std::any_of(options.methods.begin(), options.methods.end(),
                                  [](Method m) { return m != Method::aniso_baseline; });
  CostVolume costs;
  StageTimings census_time;
  if (stereo) {
    const auto begin = std::chrono::steady_clock::now();
    costs = matching_costs(sample.left, sample.right, options.params, options.workers);
    census_time.census_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - begin).count();
  }

  std::vector<Method> methods = options.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  for (Method method : methods) {
    for (double fraction : options.fractions) {
      SplitSpec spec = options.split;
      spec.seed_fraction = fraction;
      const auto split = sample_split(sample.ground_truth, spec, options.params.d_max);
      auto result = run_pipeline(method, costs, sample.left, split.seeds, options.params, options.workers);
      if (method != Method::aniso_baseline) {
        result.timings.census_ms = census_time.census_ms;
        result.timings.total_ms += census_time.census_ms;
      }
      const auto report = error_rates(result.disparity, split.eval, kDefaultThresholds, options.relative_tolerance);
      SweepRow row;
      row.dataset = options.dataset;
      row.sample = sample.name;
      row.method = method;
      row.fraction = fraction;
      row.seed = spec.rng_seed;
      row.gt_eval_count = report.evaluated;
      std::copy(report.percentages.begin(), report.percentages.end(), row.errors.begin());
      row.timings = result.timings;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.dataset, a.sample, a.method, a.fraction) < std::tie(b.dataset, b.sample, b.method, b.fraction);
  });
}

std::vector<SweepRow> mean_rows(const std::vector<SweepRow>& rows) {
  std::map<std::tuple<std::string, Method, double>, std::vector<const SweepRow*>> groups;
  for (const auto& row : rows) groups[{row.dataset, row.method, row.fraction}].push_back(&row);
  std::vector<SweepRow> out;
  for (const auto& [key, members] : groups) {
    SweepRow mean;
    std::tie(mean.dataset, mean.method, mean.fraction) = key;
    mean.sample = "mean";
    mean.seed = members.front()->seed;
    const double n = double(members.size());
    for (const auto* row : members) {
      mean.gt_eval_count += row->gt_eval_count;
      for (std::size_t t = 0; t < 3; ++t) mean.errors[t] += row->errors[t] / n;
      mean.timings.census_ms += row->timings.census_ms / n;
      mean.timings.aggregation_ms += row->timings.aggregation_ms / n;
      mean.timings.fusion_ms += row->timings.fusion_ms / n;
      mean.timings.total_ms += row->timings.total_ms / n;
    }
    out.push_back(std::move(mean));
  }
  return out;
}

namespace {

std::string fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
  return buffer;
}

}  // namespace

std::string format_csv(const std::vector<SweepRow>& rows, bool timings) {
  std::string out = "dataset,sample,method,fraction,seed,gt_eval_count,err1,err2,err3,ms_census,ms_agg,ms_fusion,ms_total\n";
  for (const auto& r : rows) {
    const auto& t = r.timings;
    out += r.dataset + "," + r.sample + "," + std::string(method_name(r.method)) + "," + format_number(r.fraction) +
           "," + std::to_string(r.seed) + "," + std::to_string(r.gt_eval_count) + "," + fixed(r.errors[0], 4) + "," +
           fixed(r.errors[1], 4) + "," + fixed(r.errors[2], 4) + "," + fixed(timings ? t.census_ms : 0.0, 3) + "," +
           fixed(timings ? t.aggregation_ms : 0.0, 3) + "," + fixed(timings ? t.fusion_ms : 0.0, 3) + "," +
           fixed(timings ? t.total_ms : 0.0, 3) + "\n";
  }
  return out;
}

std::string format_json(const std::vector<SweepRow>& rows, bool timings) {
  auto list = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {
        {"dataset", r.dataset},
        {"sample", r.sample},
        {"method", std::string(method_name(r.method))},
        {"fraction", r.fraction},
        {"seed", r.seed},
        {"gt_eval_count", r.gt_eval_count},
        {"err1", r.errors[0]},
        {"err2", r.errors[1]},
        {"err3", r.errors[2]},
    };
    if (timings) {
      row["ms_census"] = r.timings.census_ms;
      row["ms_agg"] = r.timings.aggregation_ms;
      row["ms_fusion"] = r.timings.fusion_ms;
      row["ms_total"] = r.timings.total_ms;
    }
    list.push_back(std::move(row));
  }
  return list.dump(2) + "\n";
}

RgbImage colorize(const DisparityMap& map, double d_min, double d_max) {
  if (!(d_min < d_max)) throw std::invalid_argument("colorize needs d_min < d_max");
  RgbImage out(width(map), height(map));
  for (int y = 0; y < height(map); ++y) {
    for (int x = 0; x < width(map); ++x) {
      const float d = map(y, x);
      if (!is_valid(d)) continue;
      const double t = std::clamp((double(d) - d_min) / (d_max - d_min), 0.0, 1.0);
      // Hue 240 deg (blue) down to 0 deg (red), S = V = 1.
      const double hue = 4.0 * (1.0 - t);
      const int sector = std::min(int(hue), 3);
      const auto ramp = static_cast<std::uint8_t>(std::lround(255.0 * (hue - sector)));
      const auto fall = static_cast<std::uint8_t>(255 - ramp);
      switch (sector) {
        case 0: out.set(x, y, {255, ramp, 0}); break;  // red -> yellow
        case 1: out.set(x, y, {fall, 255, 0}); break;  // yellow -> green
        case 2: out.set(x, y, {0, 255, ramp}); break;  // green -> cyan
        default: out.set(x, y, {0, fall, 255}); break;  // cyan -> blue
      }
    }
  }
  return out;
}

}  // namespace stereofuse
