#include "stereofuse/core.hpp"

#include <charconv>
#include <sstream>
#include <unordered_map>

namespace stereofuse {

DisparityMap invalid_disparity_map(int width, int height) {
  return DisparityMap::Constant(height, width, kInvalidDisparity);
}

std::size_t count_valid(const DisparityMap& map) {
  return static_cast<std::size_t>(map.isFinite().count());
}

int round_to_level(double disparity, int d_max) {
  auto level = static_cast<int>(std::ceil(disparity - 0.5));
  return std::clamp(level, 0, d_max);
}

SeedSet::SeedSet(std::vector<Seed> entries, int width, int height, int d_max)
    : width_(width), height_(height), d_max_(d_max) {
  if (width < 1 || height < 1 || d_max < 0) {
    throw std::invalid_argument("seed set needs a positive image size");
  }
  std::unordered_map<long long, std::size_t> slot;
  for (const auto& s : entries) {
    if (s.x < 0 || s.y < 0 || s.x >= width || s.y >= height) {
      throw std::invalid_argument("seed (" + std::to_string(s.x) + ", " + std::to_string(s.y) +
                                  ") outside " + std::to_string(width) + "x" + std::to_string(height));
    }
    if (!(s.d >= 0.0F && s.d <= static_cast<float>(d_max))) {
      throw std::invalid_argument("seed disparity " + std::to_string(s.d) + " outside [0, " +
                                  std::to_string(d_max) + "]");
    }
    long long key = static_cast<long long>(s.y) * width + s.x;
    auto [it, inserted] = slot.try_emplace(key, entries_.size());
    if (inserted) {
      entries_.push_back(s);
    } else {
      entries_[it->second] = s;
    }
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const Seed& a, const Seed& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
}

std::optional<std::string> validation_error(const FusionParams& p) {
  if (p.p1 < 0) return "p1 >= 0 violated";
  if (p.p1 > p.p2) return "p1 <= p2 violated";
  if (!(p.epsilon >= 0.0)) return "epsilon >= 0 violated";
  if (!(p.epsilon < p.beta)) return "epsilon < beta violated";
  if (!(p.epsilon < p.gamma)) return "epsilon < gamma violated";
  if (p.beta > kCostCap || p.gamma > kCostCap) return "beta, gamma <= cost cap violated";
  if (!(p.tau_l < p.tau_u)) return "tau_l < tau_u violated";
  if (!(p.tau_l >= 0.0 && p.tau_u <= 1.0)) return "0 <= tau_l, tau_u <= 1 violated";
  if (!(p.tau_n > 0.0 && p.tau_n < 1.0)) return "tau_n in (0,1) violated";
  if (!(p.sigma_r > 0.0)) return "sigma_r > 0 violated";
  if (!(p.sigma_d > 0.0)) return "sigma_d > 0 violated";
  if (!(p.tau_d >= 1.0)) return "tau_d >= 1 violated";
  if (p.k_w < 0) return "k_w >= 0 violated";
  if (p.k_interp < 0) return "k_interp >= 0 violated";
  if (p.d_max < 1) return "d_max >= 1 violated";
  if (p.num_paths != 4 && p.num_paths != 8) return "num_paths \xE2\x88\x88 {4,8} violated";
  if (p.census_radius < 1 || p.census_radius > 3) return "census_radius in [1,3] violated";
  if (p.aniso_iterations < 1) return "aniso_iterations >= 1 violated";
  if (!(p.aniso_kappa > 0.0)) return "aniso_kappa > 0 violated";
  if (!(p.aniso_lambda > 0.0 && p.aniso_lambda <= 0.25)) return "aniso_lambda in (0, 0.25] violated";
  return std::nullopt;
}

void validate(const FusionParams& params) {
  if (auto error = validation_error(params)) throw std::invalid_argument(*error);
}

namespace {

std::string trim(const std::string& s) {
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("config key '" + key + "': not a number: '" + text + "'");
  }
  return value;
}

int parse_int(const std::string& key, const std::string& text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("config key '" + key + "': not an integer: '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: '" + text + "'");
}

struct ParamField {
  const char* key;
  int FusionParams::*as_int = nullptr;
  double FusionParams::*as_double = nullptr;
  bool FusionParams::*as_bool = nullptr;
};

const std::vector<ParamField>& fields() {
  static const std::vector<ParamField> table = {
      {"p1", &FusionParams::p1},
      {"p2", &FusionParams::p2},
      {"beta", nullptr, &FusionParams::beta},
      {"epsilon", nullptr, &FusionParams::epsilon},
      {"gamma", nullptr, &FusionParams::gamma},
      {"tau_d", nullptr, &FusionParams::tau_d},
      {"tau_n", nullptr, &FusionParams::tau_n},
      {"tau_l", nullptr, &FusionParams::tau_l},
      {"tau_u", nullptr, &FusionParams::tau_u},
      {"sigma_r", nullptr, &FusionParams::sigma_r},
      {"sigma_d", nullptr, &FusionParams::sigma_d},
      {"k_w", &FusionParams::k_w},
      {"k_interp", &FusionParams::k_interp},
      {"d_max", &FusionParams::d_max},
      {"num_paths", &FusionParams::num_paths},
      {"census_radius", &FusionParams::census_radius},
      {"aniso_iterations", &FusionParams::aniso_iterations},
      {"aniso_kappa", nullptr, &FusionParams::aniso_kappa},
      {"aniso_lambda", nullptr, &FusionParams::aniso_lambda},
      {"literal_low_confidence", nullptr, nullptr, &FusionParams::literal_low_confidence},
  };
  return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues values;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": empty key");
    }
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

std::string format_key_values(const KeyValues& values) {
  std::string out;
  for (const auto& [key, value] : values) out += key + " = " + value + "\n";
  return out;
}

std::string format_number(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return {buffer, ptr};
}

std::string format_number(float value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return {buffer, ptr};
}

void apply_params(const KeyValues& values, FusionParams& params) {
  for (const auto& field : fields()) {
    auto it = values.find(field.key);
    if (it == values.end()) continue;
    if (field.as_int) params.*field.as_int = parse_int(it->first, it->second);
    if (field.as_double) params.*field.as_double = parse_double(it->first, it->second);
    if (field.as_bool) params.*field.as_bool = parse_bool(it->first, it->second);
  }
}

KeyValues params_to_key_values(const FusionParams& params) {
  KeyValues values;
  for (const auto& field : fields()) {
    if (field.as_int) values[field.key] = std::to_string(params.*field.as_int);
    if (field.as_double) values[field.key] = format_number(params.*field.as_double);
    if (field.as_bool) values[field.key] = params.*field.as_bool ? "true" : "false";
  }
  return values;
}

const std::vector<std::string>& param_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& field : fields()) out.emplace_back(field.key);
    return out;
  }();
  return keys;
}

std::string serialize_params(const FusionParams& params) {
  auto values = params_to_key_values(params);
  std::string out = "# stereofuse parameters\n";
  for (const auto& key : param_keys()) out += key + " = " + values.at(key) + "\n";
  return out;
}

FusionParams parse_params(const std::string& text) {
  FusionParams params;
  apply_params(parse_key_values(text), params);
  return params;
}

int default_workers() {
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

}  // namespace stereofuse
