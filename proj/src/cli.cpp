#include "stereofuse/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

namespace stereofuse {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto first = item.find_first_not_of(' ');
    auto last = item.find_last_not_of(' ');
    if (first != std::string::npos) items.push_back(item.substr(first, last - first + 1));
  }
  return items;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) out += (out.empty() ? "" : ",") + item;
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw std::invalid_argument("config key '" + key + "': not a number: '" + text + "'");
  return value;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw std::invalid_argument("config key '" + key + "': not an integer: '" + text + "'");
  return value;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: '" + text + "'");
}

NoiseDomain parse_noise_domain(const std::string& text) {
  if (text == "disparity") return NoiseDomain::disparity;
  if (text == "depth") return NoiseDomain::depth;
  throw std::invalid_argument("noise domain must be 'disparity' or 'depth', got '" + text + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(path.string() + ": cannot open");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(path.string() + ": cannot open for writing");
  out << text;
}

// Reports which pipeline stage failed alongside the underlying message.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

// ---- Command-line registry --------------------------------------------

struct Binding {
  CLI::Option* option;
  std::function<void(RunConfig&)> apply;
};

struct Flags {
  std::string config_path;
  std::vector<Binding> bindings;
};

template <typename T, typename Apply>
CLI::Option* bind(CLI::App& app, Flags& flags, const std::string& name, const std::string& help, Apply apply) {
  auto value = std::make_shared<T>();
  auto* option = app.add_option(name, *value, help);
  flags.bindings.push_back({option, [value, apply](RunConfig& config) { apply(config, *value); }});
  return option;
}

template <typename Apply>
void bind_flag(CLI::App& app, Flags& flags, const std::string& name, const std::string& help, Apply apply) {
  auto* option = app.add_flag(name, help);
  flags.bindings.push_back({option, [apply](RunConfig& config) { apply(config); }});
}

void add_run_options(CLI::App& app, Flags& flags) {
  app.add_option("--config", flags.config_path, "Config file (key = value); flags override its values")
      ->check(CLI::ExistingFile);
  bind<std::string>(app, flags, "--dataset", "Input kind: kitti | middlebury | raw-pair",
                    [](RunConfig& c, const std::string& v) { c.dataset = parse_dataset(v); })
      ->check(CLI::IsMember({"kitti", "middlebury", "raw-pair"}));
  bind<std::string>(app, flags, "--data", "Dataset root directory",
                    [](RunConfig& c, const std::string& v) { c.data = v; });
  bind<std::vector<std::string>>(app, flags, "--pair", "Left and right image of a raw pair",
                                 [](RunConfig& c, const std::vector<std::string>& v) {
                                   c.dataset = DatasetKind::raw_pair;
                                   c.left = v.at(0);
                                   c.right = v.at(1);
                                 })
      ->expected(2);
  bind<std::string>(app, flags, "--seeds", "Seed file for a raw pair (see `convert`)",
                    [](RunConfig& c, const std::string& v) { c.seeds = v; });
  bind<std::string>(app, flags, "--gt", "Ground truth for a raw pair (PFM or KITTI PNG)",
                    [](RunConfig& c, const std::string& v) { c.ground_truth = v; });
  bind<std::vector<std::string>>(app, flags, "--method",
                                 "Methods: sgm | naive | neighborhood | diffusion | aniso-baseline",
                                 [](RunConfig& c, const std::vector<std::string>& v) {
                                   c.methods.clear();
                                   for (const auto& name : v) c.methods.push_back(parse_method(name));
                                 })
      ->delimiter(',');
  bind<std::vector<double>>(app, flags, "--fraction", "Seed fraction(s) of the valid ground truth",
                            [](RunConfig& c, const std::vector<double>& v) { c.fractions = v; })
      ->delimiter(',');
  bind<double>(app, flags, "--noise", "Relative seed noise bound",
               [](RunConfig& c, double v) { c.split.noise_fraction = v; });
  bind<std::string>(app, flags, "--noise-domain", "Apply seed noise to disparity or depth",
                    [](RunConfig& c, const std::string& v) { c.split.noise_domain = parse_noise_domain(v); })
      ->check(CLI::IsMember({"disparity", "depth"}));
  bind<std::uint64_t>(app, flags, "--rng", "Seed of the split generator",
                      [](RunConfig& c, std::uint64_t v) { c.split.rng_seed = v; });
  bind<int>(app, flags, "--paths", "Aggregation directions {4|8}", [](RunConfig& c, int v) { c.params.num_paths = v; })
      ->check(CLI::IsMember({4, 8}));
  bind<int>(app, flags, "--p1", "Small-jump penalty P1", [](RunConfig& c, int v) { c.params.p1 = v; });
  bind<int>(app, flags, "--p2", "Large-jump penalty P2", [](RunConfig& c, int v) { c.params.p2 = v; });
  bind<int>(app, flags, "--dmax", "Maximum disparity", [](RunConfig& c, int v) { c.params.d_max = v; });
  bind<int>(app, flags, "--census-radius", "Census window radius [1,3]",
            [](RunConfig& c, int v) { c.params.census_radius = v; });
  bind<double>(app, flags, "--beta", "Out-of-band penalty beta", [](RunConfig& c, double v) { c.params.beta = v; });
  bind<double>(app, flags, "--gamma", "Interpolation penalty gamma", [](RunConfig& c, double v) { c.params.gamma = v; });
  bind<double>(app, flags, "--epsilon", "Minimum assigned cost epsilon",
               [](RunConfig& c, double v) { c.params.epsilon = v; });
  bind<double>(app, flags, "--tau-d", "Disparity agreement band", [](RunConfig& c, double v) { c.params.tau_d = v; });
  bind<double>(app, flags, "--tau-n", "Neighbour similarity threshold",
               [](RunConfig& c, double v) { c.params.tau_n = v; });
  bind<double>(app, flags, "--tau-l", "Low confidence cutoff", [](RunConfig& c, double v) { c.params.tau_l = v; });
  bind<double>(app, flags, "--tau-u", "High confidence cutoff", [](RunConfig& c, double v) { c.params.tau_u = v; });
  bind<double>(app, flags, "--sigma-r", "Intensity Gaussian width", [](RunConfig& c, double v) { c.params.sigma_r = v; });
  bind<double>(app, flags, "--sigma-d", "Spatial Gaussian width (px)",
               [](RunConfig& c, double v) { c.params.sigma_d = v; });
  bind<int>(app, flags, "--kw", "Neighbourhood window radius (px)", [](RunConfig& c, int v) { c.params.k_w = v; });
  bind<int>(app, flags, "--kinterp", "Interpolation radius (px)", [](RunConfig& c, int v) { c.params.k_interp = v; });
  bind<int>(app, flags, "--aniso-iterations", "Baseline diffusion iterations",
            [](RunConfig& c, int v) { c.params.aniso_iterations = v; });
  bind<double>(app, flags, "--aniso-kappa", "Baseline conductance scale",
               [](RunConfig& c, double v) { c.params.aniso_kappa = v; });
  bind<double>(app, flags, "--aniso-lambda", "Baseline step size (0, 0.25]",
               [](RunConfig& c, double v) { c.params.aniso_lambda = v; });
  bind_flag(app, flags, "--literal-low-confidence", "Set every level of low-confidence pixels to gamma",
            [](RunConfig& c) { c.params.literal_low_confidence = true; });
  bind_flag(app, flags, "--relative-tolerance", "Outliers must also exceed 5% of the ground truth",
            [](RunConfig& c) { c.relative_tolerance = true; });
  bind_flag(app, flags, "--no-timings", "Write zero timings so reports are byte-reproducible",
            [](RunConfig& c) { c.timings = false; });
  bind<int>(app, flags, "--workers", "Worker threads (0: all)", [](RunConfig& c, int v) { c.workers = v; });
  bind<std::string>(app, flags, "--out", "Output directory", [](RunConfig& c, const std::string& v) { c.out = v; });
  bind<std::vector<std::string>>(app, flags, "--format", "Report formats: csv,json",
                                 [](RunConfig& c, const std::vector<std::string>& v) { c.formats = v; })
      ->delimiter(',')
      ->check(CLI::IsMember({"csv", "json"}));
}

RunConfig resolve(const Flags& flags) {
  RunConfig config;
  if (!flags.config_path.empty()) apply_run_config(parse_key_values(read_text(flags.config_path)), config);
  for (const auto& binding : flags.bindings) {
    if (binding.option->count() > 0) binding.apply(config);
  }
  validate(config.params);
  return config;
}

std::vector<std::string> reversed(const std::vector<std::string>& args) { return {args.rbegin(), args.rend()}; }

SeedSet seeds_for(const RunConfig& config, const StereoSample& sample, std::optional<Split>& split) {
  if (config.dataset == DatasetKind::raw_pair) {
    if (config.seeds.empty()) return SeedSet{};
    auto seeds = read_seeds(config.seeds, config.params.d_max);
    if (seeds.width() != width(sample.left) || seeds.height() != height(sample.left)) {
      throw DatasetError(config.seeds + ": seed file size does not match the images");
    }
    return seeds;
  }
  SplitSpec spec = config.split;
  spec.seed_fraction = config.fractions.empty() ? 0.0 : config.fractions.front();
  split = sample_split(sample.ground_truth, spec, config.params.d_max);
  return split->seeds;
}

}  // namespace

std::string_view dataset_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kitti: return "kitti";
    case DatasetKind::middlebury: return "middlebury";
    case DatasetKind::raw_pair: return "raw-pair";
  }
  return "unknown";
}

DatasetKind parse_dataset(std::string_view name) {
  for (auto kind : {DatasetKind::kitti, DatasetKind::middlebury, DatasetKind::raw_pair}) {
    if (dataset_name(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown dataset kind '" + std::string(name) + "'");
}

KeyValues run_config_to_key_values(const RunConfig& c) {
  KeyValues values = params_to_key_values(c.params);
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.emplace_back(method_name(m));
  std::vector<std::string> fractions;
  for (auto f : c.fractions) fractions.push_back(format_number(f));
  values["dataset"] = dataset_name(c.dataset);
  values["data"] = c.data;
  values["left"] = c.left;
  values["right"] = c.right;
  values["seeds"] = c.seeds;
  values["gt"] = c.ground_truth;
  values["methods"] = join(methods);
  values["fractions"] = join(fractions);
  values["noise"] = format_number(c.split.noise_fraction);
  values["noise_domain"] = c.split.noise_domain == NoiseDomain::depth ? "depth" : "disparity";
  values["rng"] = std::to_string(c.split.rng_seed);
  values["out"] = c.out;
  values["formats"] = join(c.formats);
  values["workers"] = std::to_string(c.workers);
  values["relative_tolerance"] = c.relative_tolerance ? "true" : "false";
  values["timings"] = c.timings ? "true" : "false";
  return values;
}

void apply_run_config(const KeyValues& values, RunConfig& c) {
  apply_params(values, c.params);
  const auto& params = param_keys();
  for (const auto& [key, value] : values) {
    if (std::find(params.begin(), params.end(), key) != params.end()) continue;
    if (key == "dataset") c.dataset = parse_dataset(value);
    else if (key == "data") c.data = value;
    else if (key == "left") c.left = value;
    else if (key == "right") c.right = value;
    else if (key == "seeds") c.seeds = value;
    else if (key == "gt") c.ground_truth = value;
    else if (key == "methods") {
      c.methods.clear();
      for (const auto& name : split_list(value)) c.methods.push_back(parse_method(name));
    } else if (key == "fractions") {
      c.fractions.clear();
      for (const auto& f : split_list(value)) c.fractions.push_back(to_double(key, f));
    } else if (key == "noise") c.split.noise_fraction = to_double(key, value);
    else if (key == "noise_domain") c.split.noise_domain = parse_noise_domain(value);
    else if (key == "rng") c.split.rng_seed = to_u64(key, value);
    else if (key == "out") c.out = value;
    else if (key == "formats") c.formats = split_list(value);
    else if (key == "workers") c.workers = int(to_u64(key, value));
    else if (key == "relative_tolerance") c.relative_tolerance = to_bool(key, value);
    else if (key == "timings") c.timings = to_bool(key, value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

std::string serialize_run_config(const RunConfig& config) {
  return "# stereofuse run configuration\n" + format_key_values(run_config_to_key_values(config));
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  apply_run_config(parse_key_values(text), config);
  return config;
}

RunConfig parse_run_arguments(const std::vector<std::string>& args) {
  if (args.empty()) throw std::invalid_argument("expected a subcommand");
  CLI::App app{"stereofuse"};
  Flags flags;
  add_run_options(app, flags);
  try {
    auto rest = reversed({args.begin() + 1, args.end()});
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument(e.what());
  }
  return resolve(flags);
}

std::vector<StereoSample> load_samples(const RunConfig& config) {
  const int d_max = config.params.d_max;
  switch (config.dataset) {
    case DatasetKind::kitti:
      if (config.data.empty()) throw std::invalid_argument("--data is required for kitti");
      return load_kitti_dataset(config.data, d_max);
    case DatasetKind::middlebury:
      if (config.data.empty()) throw std::invalid_argument("--data is required for middlebury");
      return load_middlebury_dataset(config.data, d_max);
    case DatasetKind::raw_pair: {
      if (config.left.empty() || config.right.empty()) throw std::invalid_argument("--pair LEFT RIGHT is required");
      StereoSample sample;
      sample.name = fs::path(config.left).stem().string();
      sample.left = read_gray_png(config.left);
      sample.right = read_gray_png(config.right);
      if (width(sample.left) != width(sample.right) || height(sample.left) != height(sample.right)) {
        throw DatasetError(config.right + ": size differs from " + config.left);
      }
      if (config.ground_truth.empty()) {
        sample.ground_truth = invalid_disparity_map(width(sample.left), height(sample.left));
      } else {
        sample.ground_truth = fs::path(config.ground_truth).extension() == ".pfm"
                                  ? read_pfm(config.ground_truth)
                                  : read_kitti_disparity_png(config.ground_truth, d_max);
        if (width(sample.ground_truth) != width(sample.left) || height(sample.ground_truth) != height(sample.left)) {
          throw DatasetError(config.ground_truth + ": size differs from " + config.left);
        }
      }
      return {std::move(sample)};
    }
  }
  return {};
}

void execute_run(const RunConfig& config, std::ostream& log) {
  validate(config.params);
  const int workers = config.resolved_workers();
  auto samples = stage("load", [&] { return load_samples(config); });
  fs::create_directories(config.out);

  std::vector<SweepRow> rows;
  for (const auto& sample : samples) {
    std::optional<Split> split;
    const SeedSet seeds = stage("seeds", [&] { return seeds_for(config, sample, split); });
    for (Method method : config.methods) {
      if (method != Method::sgm && seeds.empty()) {
        throw std::runtime_error(std::string("seeds: method ") + std::string(method_name(method)) +
                                 " needs seeds (--seeds, or a dataset with ground truth)");
      }
      auto result = stage("pipeline", [&] {
        return run_pipeline(method, sample.left, sample.right, seeds, config.params, workers);
      });
      const auto stem = fs::path(config.out) / (sample.name + "_" + std::string(method_name(method)));
      stage("write", [&] {
        write_pfm(result.disparity, stem.string() + ".pfm");
        write_png(colorize(result.disparity, 0.0, config.params.d_max), stem.string() + ".png");
      });
      log << "wrote " << stem.string() << ".pfm\n";

      SweepRow row;
      row.dataset = std::string(dataset_name(config.dataset));
      row.sample = sample.name;
      row.method = method;
      row.fraction = split ? config.fractions.front() : 0.0;
      row.seed = config.split.rng_seed;
      row.timings = result.timings;
      const DisparityMap& truth = split ? split->eval : sample.ground_truth;
      if (count_valid(truth) > 0) {
        auto report = error_rates(result.disparity, truth, kDefaultThresholds, config.relative_tolerance);
        row.gt_eval_count = report.evaluated;
        std::copy(report.percentages.begin(), report.percentages.end(), row.errors.begin());
      } else {
        row.errors.fill(std::numeric_limits<double>::quiet_NaN());
      }
      rows.push_back(std::move(row));
    }
  }
  stage("report", [&] {
    for (const auto& format : config.formats) {
      const auto path = fs::path(config.out) / ("report." + format);
      write_text(path, format == "json" ? format_json(rows, config.timings) : format_csv(rows, config.timings));
      log << "wrote " << path.string() << "\n";
    }
  });
}

std::vector<SweepRow> bench_rows(const RunConfig& config) {
  if (config.dataset == DatasetKind::raw_pair && config.ground_truth.empty()) {
    throw std::invalid_argument("bench needs ground truth: use --dataset with --data, or --gt");
  }
  const auto samples = stage("load", [&] { return load_samples(config); });
  SweepOptions options;
  options.dataset = std::string(dataset_name(config.dataset));
  options.fractions = config.fractions;
  options.methods = config.methods;
  options.params = config.params;
  options.split = config.split;
  options.relative_tolerance = config.relative_tolerance;
  options.workers = config.resolved_workers();

  std::vector<SweepRow> rows;
  for (const auto& sample : samples) {
    auto sample_rows = stage("pipeline", [&] { return sample_sweep(sample, options); });
    rows.insert(rows.end(), sample_rows.begin(), sample_rows.end());
  }
  sort_rows(rows);
  auto means = mean_rows(rows);
  rows.insert(rows.end(), means.begin(), means.end());
  return rows;
}

void execute_bench(const RunConfig& config, const std::string& stem, std::ostream& log) {
  const auto rows = bench_rows(config);
  stage("report", [&] {
    fs::create_directories(config.out);
    for (const auto& format : config.formats) {
      const auto path = fs::path(config.out) / (stem + "." + format);
      write_text(path, format == "json" ? format_json(rows, config.timings) : format_csv(rows, config.timings));
      log << "wrote " << path.string() << "\n";
    }
  });
  for (const auto& row : rows) {
    if (row.sample != "mean") continue;
    log << method_name(row.method) << " @ " << format_number(row.fraction) << ": >1px " << row.errors[0]
        << "%  >2px " << row.errors[1] << "%  >3px " << row.errors[2] << "%\n";
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stereo disparity with sparse range-seed fusion", "stereofuse"};
  app.require_subcommand(1);

  Flags run_flags;
  Flags bench_flags;
  Flags sweep_flags;
  auto* run = app.add_subcommand("run", "Compute disparity maps and write PFM/PNG artifacts plus a report");
  add_run_options(*run, run_flags);
  auto* bench = app.add_subcommand("bench", "Evaluate methods over seed fractions on a dataset");
  add_run_options(*bench, bench_flags);
  auto* sweep = app.add_subcommand("sweep", "Seed-fraction sweep (default 5,10,15,25%) over all methods");
  add_run_options(*sweep, sweep_flags);

  auto* convert = app.add_subcommand("convert", "Depth image + calibration to a seed file");
  std::string depth_path;
  std::string seeds_out;
  double focal = 0.0;
  double baseline = 0.0;
  double depth_scale = 0.001;
  int convert_dmax = FusionParams{}.d_max;
  convert->add_option("--depth", depth_path, "Depth image: PFM in meters or 16-bit PNG")->required()->check(CLI::ExistingFile);
  convert->add_option("--focal", focal, "Focal length (px)")->required();
  convert->add_option("--baseline", baseline, "Stereo baseline (m)")->required();
  convert->add_option("--depth-scale", depth_scale, "Meters per PNG unit")->capture_default_str();
  convert->add_option("--dmax", convert_dmax, "Maximum disparity")->capture_default_str();
  convert->add_option("--out", seeds_out, "Seed file to write")->required();

  auto* inspect = app.add_subcommand("inspect", "Print PFM / PNG / seed file headers");
  std::vector<std::string> inspect_paths;
  inspect->add_option("paths", inspect_paths, "Files to inspect")->required()->check(CLI::ExistingFile);

  try {
    auto rest = reversed(args);
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    out << app.help(e.get_name() == "--help" && app.get_subcommands().size() == 1
                        ? app.get_subcommands().front()->get_name()
                        : "");
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (run->parsed()) {
      execute_run(resolve(run_flags), out);
    } else if (bench->parsed()) {
      execute_bench(resolve(bench_flags), "bench", out);
    } else if (sweep->parsed()) {
      auto config = resolve(sweep_flags);
      bool fractions_given = false;
      bool methods_given = false;
      for (const auto& b : sweep_flags.bindings) {
        if (b.option->count() == 0) continue;
        fractions_given |= b.option->get_name() == "--fraction";
        methods_given |= b.option->get_name() == "--method";
      }
      if (!fractions_given && sweep_flags.config_path.empty()) config.fractions = {0.05, 0.10, 0.15, 0.25};
      if (!methods_given && sweep_flags.config_path.empty()) config.methods.assign(kAllMethods.begin(), kAllMethods.end());
      execute_bench(config, "sweep", out);
    } else if (convert->parsed()) {
      auto depth = stage("load", [&] { return read_depth_image(depth_path, depth_scale); });
      auto seeds = stage("convert", [&] { return seeds_from_depth(depth, focal, baseline, convert_dmax); });
      stage("write", [&] { write_seeds(seeds, seeds_out); });
      out << "wrote " << seeds.size() << " seeds to " << seeds_out << "\n";
    } else if (inspect->parsed()) {
      for (const auto& path : inspect_paths) {
        const auto ext = fs::path(path).extension();
        if (ext == ".pfm") {
          const auto header = read_pfm_header(path);
          const auto map = read_pfm(path);
          out << path << ": PFM " << header.width << "x" << header.height << " scale " << header.scale << " ("
              << (header.scale < 0 ? "little" : "big") << "-endian), " << count_valid(map) << " valid\n";
        } else if (ext == ".png") {
          const auto header = read_png_header(path);
          out << path << ": PNG " << header.width << "x" << header.height << ", " << header.bit_depth << "-bit, "
              << header.channels << " channel(s)\n";
        } else {
          const auto seeds = read_seeds(path, std::numeric_limits<int>::max() / 2);
          out << path << ": seeds " << seeds.width() << "x" << seeds.height() << ", " << seeds.size() << " entries\n";
        }
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace stereofuse
