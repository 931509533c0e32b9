#pragma once

#include "stereofuse/datasets.hpp"
#include "stereofuse/pipeline.hpp"

namespace stereofuse {

inline constexpr std::array<double, 3> kDefaultThresholds = {1.0, 2.0, 3.0};

/// Outlier percentages of one disparity estimate.
struct ErrorReport {
  std::string method;
  std::vector<double> thresholds;
  std::vector<double> percentages;  ///< one per threshold, in [0, 100]
  std::size_t evaluated = 0;
  StageTimings timings;
};

/// Percentage of valid `eval` pixels whose error exceeds each threshold
/// (strictly). Invalid estimates count as outliers everywhere. With
/// `relative`, an error must also exceed 5% of the ground truth. Throws when
/// `eval` has no valid pixel.
ErrorReport error_rates(const DisparityMap& estimate, const DisparityMap& eval,
                        std::span<const double> thresholds = kDefaultThresholds, bool relative = false);

/// One line of a benchmark table.
struct SweepRow {
  std::string dataset;
  std::string sample;
  Method method = Method::sgm;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::size_t gt_eval_count = 0;
  std::array<double, 3> errors{};  ///< > 1, 2, 3 px
  StageTimings timings;
};

struct SweepOptions {
  std::string dataset = "dataset";
  std::vector<double> fractions;
  std::vector<Method> methods;
  FusionParams params;
  SplitSpec split;  ///< seed_fraction is replaced by each entry of `fractions`
  bool relative_tolerance = false;
  int workers = 1;
};

/// Splits, runs and evaluates every (fraction, method) cell on one sample.
/// Rows come out ordered by method (report order), then fraction.
std::vector<SweepRow> sample_sweep(const StereoSample& sample, const SweepOptions& options);

/// Sorts by (dataset, sample, method, fraction).
void sort_rows(std::vector<SweepRow>& rows);

/// Means over samples per (dataset, method, fraction); sample is "mean" and
/// gt_eval_count the total.
std::vector<SweepRow> mean_rows(const std::vector<SweepRow>& rows);

/// Header: dataset,sample,method,fraction,seed,gt_eval_count,err1,err2,err3,
/// ms_census,ms_agg,ms_fusion,ms_total. Timings are written as 0 when
/// `timings` is false.
std::string format_csv(const std::vector<SweepRow>& rows, bool timings = true);
std::string format_json(const std::vector<SweepRow>& rows, bool timings = true);

/// Linear hue ramp from blue (d_min) to red (d_max) at full saturation and
/// value; invalid pixels are black. Throws unless d_min < d_max.
RgbImage colorize(const DisparityMap& map, double d_min, double d_max);

}  // namespace stereofuse
