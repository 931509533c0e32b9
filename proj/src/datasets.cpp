#include "stereofuse/datasets.hpp"

#include <png.h>

#include <bit>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace stereofuse {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
  throw DatasetError(path.string() + ": " + what);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) fail(path, "write failed");
}

// ---- PFM ---------------------------------------------------------------

struct ParsedPfm {
  PfmHeader header;
  std::size_t raster_offset = 0;
};

ParsedPfm parse_pfm_header(const std::string& bytes, const fs::path& path) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    std::size_t begin = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (begin == pos) fail(path, "truncated PFM header");
    return bytes.substr(begin, pos - begin);
  };
  auto magic = token();
  if (magic == "PF") fail(path, "color PFM is not supported");
  if (magic != "Pf") fail(path, "not a PFM file (magic '" + magic + "')");

  ParsedPfm parsed;
  auto number = [&](const std::string& text, auto& out) {
    std::istringstream in(text);
    in >> out;
    if (!in || !in.eof()) fail(path, "malformed PFM header field '" + text + "'");
  };
  number(token(), parsed.header.width);
  number(token(), parsed.header.height);
  number(token(), parsed.header.scale);
  if (parsed.header.width < 1 || parsed.header.height < 1) fail(path, "PFM dimensions must be positive");
  if (parsed.header.scale == 0.0) fail(path, "PFM scale must be non-zero");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    fail(path, "truncated PFM header");
  }
  parsed.raster_offset = pos + 1;
  return parsed;
}

// ---- PNG ---------------------------------------------------------------

struct File {
  std::FILE* handle = nullptr;
  File(const fs::path& path, const char* mode) : handle(std::fopen(path.c_str(), mode)) {}
  ~File() {
    if (handle) std::fclose(handle);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;
};

struct RawPng {
  PngHeader header;
  std::vector<std::uint16_t> samples;  // row-major, interleaved channels
};

// libpng reports errors by longjmp; every object with a destructor is built
// before setjmp so nothing is skipped on the way back.
RawPng read_png_raw(const fs::path& path, bool header_only) {
  File file(path, "rb");
  if (!file.handle) fail(path, "cannot open");
  unsigned char signature[8] = {};
  if (std::fread(signature, 1, 8, file.handle) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    fail(path, "not a PNG file");
  }
  RawPng raw;
  std::vector<png_byte> bytes;
  std::vector<png_bytep> rows;

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "corrupt or truncated PNG");
  }
  png_init_io(png, file.handle);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  raw.header.width = int(png_get_image_width(png, info));
  raw.header.height = int(png_get_image_height(png, info));
  raw.header.bit_depth = depth;
  raw.header.channels = png_get_channels(png, info);
  if (header_only) {
    png_destroy_read_struct(&png, &info, nullptr);
    return raw;
  }

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  raw.header.bit_depth = png_get_bit_depth(png, info);
  raw.header.channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  bytes.resize(row_bytes * std::size_t(raw.header.height));
  rows.resize(std::size_t(raw.header.height));
  for (int y = 0; y < raw.header.height; ++y) rows[std::size_t(y)] = bytes.data() + row_bytes * std::size_t(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = std::size_t(raw.header.width) * std::size_t(raw.header.height) * std::size_t(raw.header.channels);
  raw.samples.resize(count);
  if (raw.header.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      raw.samples[i] = static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) raw.samples[i] = bytes[i];
  }
  return raw;
}

void write_png_raw(const fs::path& path, int w, int h, int depth, int color, int channels,
                   const std::vector<std::uint16_t>& samples) {
  std::vector<png_byte> bytes(samples.size() * (depth == 16 ? 2 : 1));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (depth == 16) {
      bytes[2 * i] = png_byte(samples[i] >> 8);
      bytes[2 * i + 1] = png_byte(samples[i] & 0xFF);
    } else {
      bytes[i] = png_byte(samples[i]);
    }
  }
  const std::size_t row_bytes = std::size_t(w) * std::size_t(channels) * (depth == 16 ? 2 : 1);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[std::size_t(y)] = bytes.data() + row_bytes * std::size_t(y);

  File file(path, "wb");
  if (!file.handle) fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "PNG write failed");
  }
  png_init_io(png, file.handle);
  png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---- Sampling ----------------------------------------------------------

// Unbiased integer in [0, bound) by rejection; portable unlike
// std::uniform_int_distribution.
std::uint64_t uniform_below(std::mt19937_64& engine, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine();
    if (r >= threshold) return r % bound;
  }
}

// Uniform in [0, 1) with 53 random bits.
double unit_interval(std::mt19937_64& engine) { return double(engine() >> 11) * 0x1.0p-53; }

constexpr std::uint64_t kNoiseStream = 0x9E3779B97F4A7C15ULL;

}  // namespace

// ---- PFM ---------------------------------------------------------------

PfmHeader read_pfm_header(const fs::path& path) { return parse_pfm_header(read_file(path), path).header; }

DisparityMap read_pfm(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto parsed = parse_pfm_header(bytes, path);
  const int w = parsed.header.width;
  const int h = parsed.header.height;
  const std::size_t needed = std::size_t(w) * std::size_t(h) * sizeof(float);
  if (bytes.size() - parsed.raster_offset < needed) fail(path, "truncated PFM raster");

  const bool little = parsed.header.scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  DisparityMap map(h, w);
  const char* raster = bytes.data() + parsed.raster_offset;
  for (int row = 0; row < h; ++row) {
    for (int x = 0; x < w; ++x) {
      std::uint32_t word = 0;
      std::memcpy(&word, raster + (std::size_t(row) * w + x) * 4, 4);
      if (swap) word = __builtin_bswap32(word);
      const float value = std::bit_cast<float>(word);
      map(h - 1 - row, x) = std::isfinite(value) ? value : kInvalidDisparity;
    }
  }
  return map;
}

void write_pfm(const DisparityMap& map, const fs::path& path) {
  const int w = width(map);
  const int h = height(map);
  std::string bytes = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1\n";
  const std::size_t header = bytes.size();
  bytes.resize(header + std::size_t(w) * std::size_t(h) * 4);
  for (int row = 0; row < h; ++row) {
    for (int x = 0; x < w; ++x) {
      const float value = map(h - 1 - row, x);
      std::uint32_t word = std::bit_cast<std::uint32_t>(is_valid(value) ? value : kInvalidDisparity);
      if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap32(word);
      std::memcpy(bytes.data() + header + (std::size_t(row) * w + x) * 4, &word, 4);
    }
  }
  write_file(path, bytes);
}

// ---- PNG ---------------------------------------------------------------

PngHeader read_png_header(const fs::path& path) { return read_png_raw(path, true).header; }

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

GrayImage read_gray_png(const fs::path& path) {
  const auto raw = read_png_raw(path, false);
  if (raw.header.bit_depth != 8) fail(path, "expected an 8-bit image, got " + std::to_string(raw.header.bit_depth) + "-bit");
  const int c = raw.header.channels;
  GrayImage image(raw.header.height, raw.header.width);
  for (int y = 0; y < raw.header.height; ++y) {
    for (int x = 0; x < raw.header.width; ++x) {
      const auto* s = &raw.samples[(std::size_t(y) * raw.header.width + x) * c];
      image(y, x) = c >= 3 ? luma(std::uint8_t(s[0]), std::uint8_t(s[1]), std::uint8_t(s[2]))
                           : std::uint8_t(s[0]);
    }
  }
  return image;
}

Image<std::uint16_t> read_png16(const fs::path& path) {
  const auto raw = read_png_raw(path, false);
  if (raw.header.bit_depth != 16) {
    fail(path, "expected a 16-bit PNG, got " + std::to_string(raw.header.bit_depth) + "-bit");
  }
  if (raw.header.channels != 1) {
    fail(path, "expected a single-channel PNG, got " + std::to_string(raw.header.channels) + " channels");
  }
  Image<std::uint16_t> image(raw.header.height, raw.header.width);
  std::copy(raw.samples.begin(), raw.samples.end(), image.data());
  return image;
}

void write_png(const GrayImage& image, const fs::path& path) {
  std::vector<std::uint16_t> samples(image.data(), image.data() + image.size());
  write_png_raw(path, width(image), height(image), 8, PNG_COLOR_TYPE_GRAY, 1, samples);
}

void write_png(const Image<std::uint16_t>& image, const fs::path& path) {
  std::vector<std::uint16_t> samples(image.data(), image.data() + image.size());
  write_png_raw(path, width(image), height(image), 16, PNG_COLOR_TYPE_GRAY, 1, samples);
}

void write_png(const RgbImage& image, const fs::path& path) {
  std::vector<std::uint16_t> samples(image.data.begin(), image.data.end());
  write_png_raw(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, 3, samples);
}

DisparityMap read_kitti_disparity_png(const fs::path& path, int d_max) {
  const auto raw = read_png16(path);
  DisparityMap map(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const std::uint16_t v = raw.data()[i];
    map.data()[i] = v == 0 ? kInvalidDisparity : std::min(float(v) / 256.0F, float(d_max));
  }
  return map;
}

// ---- Layouts -----------------------------------------------------------

Calibration read_middlebury_calib(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  Calibration calib;
  bool have_focal = false;
  bool have_baseline = false;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    if (key == "cam0") {
      auto bracket = value.find('[');
      std::istringstream v(value.substr(bracket == std::string::npos ? 0 : bracket + 1));
      if (!(v >> calib.focal_px)) fail(path, "malformed cam0 entry");
      have_focal = true;
    } else if (key == "baseline") {
      std::istringstream v(value);
      double millimetres = 0.0;
      if (!(v >> millimetres)) fail(path, "malformed baseline entry");
      calib.baseline_m = millimetres / 1000.0;
      have_baseline = true;
    }
  }
  if (!have_focal) fail(path, "missing cam0");
  if (!have_baseline) fail(path, "missing baseline");
  return calib;
}

StereoSample load_middlebury_sample(const fs::path& dir, int d_max) {
  StereoSample sample;
  sample.name = dir.filename().string();
  if (sample.name.empty()) sample.name = dir.parent_path().filename().string();
  sample.left = read_gray_png(dir / "im0.png");
  sample.right = read_gray_png(dir / "im1.png");
  sample.ground_truth = read_pfm(dir / "disp0.pfm");
  sample.calib = read_middlebury_calib(dir / "calib.txt");
  if (width(sample.left) != width(sample.right) || height(sample.left) != height(sample.right) ||
      width(sample.left) != width(sample.ground_truth) || height(sample.left) != height(sample.ground_truth)) {
    fail(dir, "image and ground-truth sizes disagree");
  }
  sample.ground_truth = (sample.ground_truth <= float(d_max) && sample.ground_truth >= 0.0F)
                            .select(sample.ground_truth, kInvalidDisparity);
  return sample;
}

std::vector<StereoSample> load_middlebury_dataset(const fs::path& root, int d_max) {
  if (fs::exists(root / "im0.png")) return {load_middlebury_sample(root, d_max)};
  if (!fs::is_directory(root)) fail(root, "not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "im0.png")) dirs.push_back(entry.path());
  }
  if (dirs.empty()) fail(root, "no Middlebury-style samples (im0.png) found");
  std::sort(dirs.begin(), dirs.end());
  std::vector<StereoSample> samples;
  for (const auto& dir : dirs) samples.push_back(load_middlebury_sample(dir, d_max));
  return samples;
}

void write_middlebury_sample(const StereoSample& sample, const fs::path& dir) {
  fs::create_directories(dir);
  write_png(sample.left, dir / "im0.png");
  write_png(sample.right, dir / "im1.png");
  write_pfm(sample.ground_truth, dir / "disp0.pfm");
  const double f = sample.calib.focal_px;
  std::string calib = "cam0=[" + format_number(f) + " 0 0; 0 " + format_number(f) + " 0; 0 0 1]\n" +
                      "cam1=[" + format_number(f) + " 0 0; 0 " + format_number(f) + " 0; 0 0 1]\n" +
                      "baseline=" + format_number(sample.calib.baseline_m * 1000.0) + "\n" +
                      "width=" + std::to_string(width(sample.left)) + "\n" +
                      "height=" + std::to_string(height(sample.left)) + "\n";
  write_file(dir / "calib.txt", calib);
}

std::vector<StereoSample> load_kitti_dataset(const fs::path& root, int d_max) {
  const auto disp_dir = root / "disp_occ_0";
  if (!fs::is_directory(disp_dir)) fail(root, "missing disp_occ_0/");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(disp_dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 7 && name.ends_with("_10.png")) files.push_back(entry.path());
  }
  if (files.empty()) fail(disp_dir, "no <id>_10.png ground truth found");
  std::sort(files.begin(), files.end());
  std::vector<StereoSample> samples;
  for (const auto& file : files) {
    StereoSample sample;
    sample.name = file.stem().string();
    sample.left = read_gray_png(root / "image_2" / file.filename());
    sample.right = read_gray_png(root / "image_3" / file.filename());
    sample.ground_truth = read_kitti_disparity_png(file, d_max);
    if (width(sample.left) != width(sample.ground_truth) || height(sample.left) != height(sample.ground_truth) ||
        width(sample.right) != width(sample.left) || height(sample.right) != height(sample.left)) {
      fail(file, "image and ground-truth sizes disagree");
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

// ---- Seeds -------------------------------------------------------------

Split sample_split(const DisparityMap& ground_truth, const SplitSpec& spec, int d_max) {
  if (!(spec.seed_fraction >= 0.0 && spec.seed_fraction < 1.0)) {
    throw std::invalid_argument("seed fraction must be in [0, 1)");
  }
  if (!(spec.noise_fraction >= 0.0 && spec.noise_fraction < 1.0)) {
    throw std::invalid_argument("noise fraction must be in [0, 1)");
  }
  std::vector<std::size_t> valid;
  for (Eigen::Index i = 0; i < ground_truth.size(); ++i) {
    const float v = ground_truth.data()[i];
    if (is_valid(v) && v >= 0.0F && v <= float(d_max)) valid.push_back(std::size_t(i));
  }
  if (valid.empty()) throw std::invalid_argument("ground truth has no valid pixels");

  const auto count = std::size_t(std::llround(spec.seed_fraction * double(valid.size())));
  std::mt19937_64 selection(spec.rng_seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + std::size_t(uniform_below(selection, valid.size() - i));
    std::swap(valid[i], valid[j]);
  }
  std::sort(valid.begin(), valid.begin() + std::ptrdiff_t(count));

  const int w = width(ground_truth);
  Split split;
  split.eval = ground_truth;
  split.eval = (split.eval >= 0.0F && split.eval <= float(d_max)).select(split.eval, kInvalidDisparity);
  std::mt19937_64 noise(spec.rng_seed ^ kNoiseStream);
  std::vector<Seed> seeds;
  seeds.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t index = valid[i];
    const double u = (2.0 * unit_interval(noise) - 1.0) * spec.noise_fraction;
    const double truth = ground_truth.data()[index];
    const double noisy = spec.noise_domain == NoiseDomain::disparity ? truth * (1.0 + u) : truth / (1.0 + u);
    seeds.push_back({int(index % std::size_t(w)), int(index / std::size_t(w)),
                     static_cast<float>(std::clamp(noisy, 0.0, double(d_max)))});
    split.eval.data()[index] = kInvalidDisparity;
  }
  split.seeds = SeedSet(std::move(seeds), w, height(ground_truth), d_max);
  return split;
}

double depth_to_disparity(double depth_m, double focal_px, double baseline_m) {
  if (!(depth_m > 0.0)) throw std::invalid_argument("depth must be positive");
  return focal_px * baseline_m / depth_m;
}

SeedSet seeds_from_depth(const Image<float>& depth_m, double focal_px, double baseline_m, int d_max) {
  if (!(focal_px > 0.0) || !(baseline_m > 0.0)) {
    throw std::invalid_argument("focal length and baseline must be positive");
  }
  std::vector<Seed> seeds;
  for (int y = 0; y < height(depth_m); ++y) {
    for (int x = 0; x < width(depth_m); ++x) {
      const float z = depth_m(y, x);
      if (!std::isfinite(z) || z <= 0.0F) continue;
      const double d = depth_to_disparity(z, focal_px, baseline_m);
      if (d <= double(d_max)) seeds.push_back({x, y, static_cast<float>(d)});
    }
  }
  return SeedSet(std::move(seeds), width(depth_m), height(depth_m), d_max);
}

Image<float> read_depth_image(const fs::path& path, double png_scale) {
  if (path.extension() == ".pfm") {
    Image<float> depth = read_pfm(path);
    return depth;
  }
  const auto raw = read_png16(path);
  Image<float> depth(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    depth.data()[i] = raw.data()[i] == 0 ? 0.0F : static_cast<float>(raw.data()[i] * png_scale);
  }
  return depth;
}

std::string format_seeds(const SeedSet& seeds) {
  std::string out = std::to_string(seeds.width()) + " " + std::to_string(seeds.height()) + "\n";
  for (const auto& s : seeds) {
    out += std::to_string(s.x) + " " + std::to_string(s.y) + " " + format_number(s.d) + "\n";
  }
  return out;
}

SeedSet parse_seeds(const std::string& text, int d_max) {
  std::istringstream in(text);
  std::string line;
  int w = 0;
  int h = 0;
  bool have_header = false;
  std::vector<Seed> seeds;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    if (!have_header) {
      if (!(fields >> w >> h) || w < 1 || h < 1) {
        throw std::invalid_argument("seed file line " + std::to_string(number) + ": expected '<width> <height>'");
      }
      have_header = true;
      continue;
    }
    Seed s;
    if (!(fields >> s.x >> s.y >> s.d)) {
      throw std::invalid_argument("seed file line " + std::to_string(number) + ": expected 'x y d'");
    }
    seeds.push_back(s);
  }
  if (!have_header) throw std::invalid_argument("seed file has no '<width> <height>' header");
  return SeedSet(std::move(seeds), w, h, d_max);
}

void write_seeds(const SeedSet& seeds, const fs::path& path) { write_file(path, format_seeds(seeds)); }

SeedSet read_seeds(const fs::path& path, int d_max) {
  try {
    return parse_seeds(read_file(path), d_max);
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

}  // namespace stereofuse
