#include "stereofuse/synthetic.hpp"

#include <random>

namespace stereofuse {

namespace {

struct Layer {
  // d = a + b x + c y, in left-image coordinates
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  bool ellipse = false;
  double cx = 0.0;
  double cy = 0.0;
  double rx = 1e9;
  double ry = 1e9;
  Surface surface = Surface::textured;
  double base = 128.0;
  double amplitude = 60.0;
  double period = 8.0;
  double cell = 3.0;
  std::vector<double> lattice;  // value-noise lattice for textured layers
  int lattice_cols = 0;

  double disparity(double x, double y) const { return a + b * x + c * y; }

  bool contains(double x, double y) const {
    const double u = (x - cx) / rx;
    const double v = (y - cy) / ry;
    return ellipse ? u * u + v * v <= 1.0 : std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
  }

  double intensity(double x, double y) const {
    switch (surface) {
      case Surface::uniform:
        return base;
      case Surface::striped:
        return base + amplitude * (std::fmod(std::floor(x / (period / 2.0)), 2.0) == 0.0 ? 1.0 : -1.0) * 0.5;
      case Surface::textured: {
        // Bilinear value noise; the lattice covers [-cell, width + max disparity].
        const double gx = x / cell + 1.0;
        const double gy = y / cell + 1.0;
        const int ix = std::clamp(int(std::floor(gx)), 0, lattice_cols - 2);
        const int iy = std::clamp(int(std::floor(gy)), 0, int(lattice.size()) / lattice_cols - 2);
        const double fx = std::clamp(gx - ix, 0.0, 1.0);
        const double fy = std::clamp(gy - iy, 0.0, 1.0);
        auto at = [&](int i, int j) { return lattice[std::size_t(j) * lattice_cols + i]; };
        const double top = at(ix, iy) * (1 - fx) + at(ix + 1, iy) * fx;
        const double bottom = at(ix, iy + 1) * (1 - fx) + at(ix + 1, iy + 1) * fx;
        return base + amplitude * (top * (1 - fy) + bottom * fy);
      }
    }
    return base;
  }
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (double(rng() >> 11) * 0x1.0p-53);
}

// Box-Muller; std::normal_distribution is not reproducible across libraries.
double normal(std::mt19937_64& rng) {
  const double u1 = std::max(uniform(rng, 0.0, 1.0), 1e-300);
  const double u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

void fill_lattice(Layer& layer, int width, int height, double max_disparity, std::mt19937_64& rng) {
  layer.lattice_cols = int((width + max_disparity) / layer.cell) + 4;
  const int rows = int(height / layer.cell) + 4;
  layer.lattice.resize(std::size_t(layer.lattice_cols) * std::size_t(rows));
  for (auto& v : layer.lattice) v = uniform(rng, -1.0, 1.0);
}

std::uint8_t to_gray(double value) { return static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L)); }

}  // namespace

GrayImage random_texture(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GrayImage image(height, width);
  for (Eigen::Index i = 0; i < image.size(); ++i) image.data()[i] = std::uint8_t(rng() >> 56);
  return image;
}

StereoSample shifted_texture_pair(int width, int height, int shift, std::uint64_t seed) {
  StereoSample sample;
  sample.name = "shift" + std::to_string(shift);
  sample.left = random_texture(width, height, seed);
  sample.right = random_texture(width, height, seed + 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x + shift < width; ++x) sample.right(y, x) = sample.left(y, x + shift);
  }
  sample.ground_truth = DisparityMap::Constant(height, width, float(shift));
  sample.calib = {500.0, 0.2};
  return sample;
}

StereoSample synthesize_scene(const SceneSpec& spec, std::string name) {
  if (spec.width < 8 || spec.height < 8) throw std::invalid_argument("scene must be at least 8x8");
  if (!(spec.min_disparity >= 0.0 && spec.max_disparity > spec.min_disparity + 4.0)) {
    throw std::invalid_argument("scene disparity range too small");
  }
  if (spec.surfaces.empty()) throw std::invalid_argument("scene needs at least one surface kind");
  auto surface_of = [&](int layer) { return spec.surfaces[std::size_t(layer) % spec.surfaces.size()]; };
  std::mt19937_64 rng(spec.seed);
  const double w = spec.width;
  const double h = spec.height;
  const double span = spec.max_disparity - spec.min_disparity;

  // Background: ground-like plane, disparity growing towards the bottom.
  std::vector<Layer> layers;
  {
    Layer back;
    back.a = spec.min_disparity;
    back.c = 0.15 * span / h;
    back.surface = surface_of(0);
    back.base = uniform(rng, 100.0, 150.0);
    back.amplitude = uniform(rng, 50.0, 80.0);
    back.cell = uniform(rng, 1.5, 3.0);
    fill_lattice(back, spec.width, spec.height, spec.max_disparity, rng);
    layers.push_back(std::move(back));
  }

  // Foreground objects get increasing disparity bands so nearer layers stay in front.
  const int objects = std::max(spec.objects, 0);
  const double band = 0.8 * span / std::max(objects, 1);
  for (int i = 0; i < objects; ++i) {
    Layer layer;
    const double lo = spec.min_disparity + 0.2 * span + band * i;
    layer.ellipse = (rng() & 1U) != 0;
    layer.cx = uniform(rng, 0.2 * w, 0.8 * w);
    layer.cy = uniform(rng, 0.2 * h, 0.8 * h);
    layer.rx = uniform(rng, 0.12 * w, 0.3 * w);
    layer.ry = uniform(rng, 0.15 * h, 0.35 * h);
    // Slant across the object stays inside the layer's band.
    layer.b = uniform(rng, -0.3, 0.3) * band / (2.0 * layer.rx);
    layer.c = uniform(rng, -0.3, 0.3) * band / (2.0 * layer.ry);
    layer.a = lo + 0.5 * band - layer.b * layer.cx - layer.c * layer.cy;
    layer.surface = surface_of(i + 1);
    layer.base = uniform(rng, 40.0, 220.0);
    layer.amplitude = uniform(rng, 40.0, 70.0);
    layer.period = uniform(rng, 6.0, 10.0);
    layer.cell = uniform(rng, 1.5, 3.0);
    fill_lattice(layer, spec.width, spec.height, spec.max_disparity, rng);
    layers.push_back(std::move(layer));
  }

  StereoSample sample;
  sample.name = std::move(name);
  sample.calib = {spec.focal_px, spec.baseline_m};
  sample.left = GrayImage(spec.height, spec.width);
  sample.right = GrayImage(spec.height, spec.width);
  sample.ground_truth = DisparityMap(spec.height, spec.width);

  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      // Left view: the pixel is its own scene coordinate.
      for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        if (it == layers.rend() - 1 || it->contains(x, y)) {
          sample.left(y, x) = to_gray(it->intensity(x, y) + spec.noise_sigma * normal(rng));
          sample.ground_truth(y, x) = static_cast<float>(it->disparity(x, y));
          break;
        }
      }
      // Right view: solve x_left - d(x_left, y) = x for each layer.
      for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        const double xl = (x + it->a + it->c * y) / (1.0 - it->b);
        if (it == layers.rend() - 1 || it->contains(xl, y)) {
          sample.right(y, x) = to_gray(it->intensity(xl, y) + spec.noise_sigma * normal(rng));
          break;
        }
      }
    }
  }
  return sample;
}

}  // namespace stereofuse
