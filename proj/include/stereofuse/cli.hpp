#pragma once

#include "stereofuse/eval.hpp"

#include <iosfwd>

namespace stereofuse {

enum class DatasetKind { kitti, middlebury, raw_pair };

std::string_view dataset_name(DatasetKind kind);
DatasetKind parse_dataset(std::string_view name);

/// Everything `run`, `bench` and `sweep` need. Serializes to the same
/// `key = value` format as FusionParams.
struct RunConfig {
  DatasetKind dataset = DatasetKind::raw_pair;
  std::string data;  ///< dataset root for kitti / middlebury
  std::string left;
  std::string right;
  std::string seeds;  ///< optional seed file for raw pairs
  std::string ground_truth;  ///< optional PFM or KITTI PNG for raw pairs
  std::vector<Method> methods = {Method::sgm};
  std::vector<double> fractions = {0.15};
  SplitSpec split;
  FusionParams params;
  std::string out = "out";
  std::vector<std::string> formats = {"csv"};
  int workers = 0;  ///< 0: all hardware threads
  bool relative_tolerance = false;
  bool timings = true;

  int resolved_workers() const { return workers > 0 ? workers : default_workers(); }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

KeyValues run_config_to_key_values(const RunConfig& config);
/// Unknown keys are an error.
void apply_run_config(const KeyValues& values, RunConfig& config);
std::string serialize_run_config(const RunConfig& config);
RunConfig parse_run_config(const std::string& text);

/// Parses `<run|bench|sweep> [flags]` into a RunConfig: defaults, then the
/// `--config` file, then flags. Throws std::invalid_argument on bad input.
RunConfig parse_run_arguments(const std::vector<std::string>& args);

/// Loads the samples a config points at.
std::vector<StereoSample> load_samples(const RunConfig& config);

/// `run`: disparity PFM + colorized PNG per (sample, method), plus report.csv.
void execute_run(const RunConfig& config, std::ostream& log);

/// `bench` / `sweep`: per-sample rows followed by per-(method, fraction) means.
std::vector<SweepRow> bench_rows(const RunConfig& config);
void execute_bench(const RunConfig& config, const std::string& stem, std::ostream& log);

/// Entry point shared by the executable and the tests.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stereofuse
