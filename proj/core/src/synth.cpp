#include "tecnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "tecnet/errors.hpp"
#include "tecnet/parallel.hpp"

namespace tecnet {

namespace {

struct Ellipse {
  double cy, cx, ry, rx, angle;

  bool contains(double y, double x) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double dy = y - cy, dx = x - cx;
    const double u = (c * dx + s * dy) / rx, v = (-s * dx + c * dy) / ry;
    return u * u + v * v <= 1.0;
  }
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + index + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

ShapeFamily parse_shape_family(const std::string& name) {
  if (name == "ellipse") return ShapeFamily::ellipse;
  if (name == "blob-union" || name == "blob") return ShapeFamily::blob_union;
  throw ConfigError("unknown shape family \"" + name + "\" (expected ellipse or blob-union)");
}

SynthSample generate_sample(const SynthSpec& spec, std::size_t index) {
  if (spec.size < 32) throw ConfigError("synthetic images must be at least 32 pixels wide");
  if (spec.gap <= 0.0 || spec.gap > 1.0) throw ConfigError("contrast gap must lie in (0, 1]");
  if (spec.noise < 0.0) throw ConfigError("noise sigma must be non-negative");
  std::mt19937_64 rng(mix(spec.seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double n = static_cast<double>(spec.size);

  std::vector<Ellipse> shapes;
  const int objects = 1 + static_cast<int>(unit(rng) * 3.0) % 3;
  for (int o = 0; o < objects; ++o) {
    const double ry = n * (0.12 + 0.14 * unit(rng));
    const double rx = n * (0.12 + 0.14 * unit(rng));
    const double margin = std::max(ry, rx) * 0.6;
    const double cy = margin + (n - 2 * margin) * unit(rng);
    const double cx = margin + (n - 2 * margin) * unit(rng);
    const double angle = std::numbers::pi * unit(rng);
    shapes.push_back({cy, cx, ry, rx, angle});
    if (spec.family == ShapeFamily::blob_union) {
      // two or three smaller lobes attached to the main body
      const int lobes = 2 + static_cast<int>(unit(rng) * 2.0) % 2;
      for (int l = 0; l < lobes; ++l) {
        const double t = 2.0 * std::numbers::pi * unit(rng);
        const double r = 0.55 + 0.3 * unit(rng);
        shapes.push_back({cy + std::sin(t) * ry * r, cx + std::cos(t) * rx * r, ry * 0.55,
                          rx * 0.55, std::numbers::pi * unit(rng)});
      }
    }
  }

  const double ramp_angle = 2.0 * std::numbers::pi * unit(rng);
  const double gy = std::sin(ramp_angle), gx = std::cos(ramp_angle);
  const double background = (1.0 - spec.gap) / 2.0;
  std::normal_distribution<double> noise(0.0, spec.noise > 0.0 ? spec.noise : 1.0);

  SynthSample s;
  s.image = {spec.size, spec.size, std::vector<std::uint8_t>(spec.size * spec.size)};
  s.mask = {spec.size, spec.size, std::vector<std::uint8_t>(spec.size * spec.size)};
  for (std::size_t y = 0; y < spec.size; ++y) {
    for (std::size_t x = 0; x < spec.size; ++x) {
      const double py = static_cast<double>(y) + 0.5, px = static_cast<double>(x) + 0.5;
      bool inside = false;
      for (const Ellipse& e : shapes) inside = inside || e.contains(py, px);
      // ramp in [-0.5, 0.5] across the image diagonal direction
      const double ramp = ((py / n - 0.5) * gy + (px / n - 0.5) * gx) / std::sqrt(2.0);
      double v = background + spec.gradient * ramp + (inside ? spec.gap : 0.0);
      if (spec.noise > 0.0) v += noise(rng);
      s.image.pixels[y * spec.size + x] = to_byte(v);
      s.mask.pixels[y * spec.size + x] = inside ? 255 : 0;
    }
  }
  return s;
}

void generate(const SynthSpec& spec, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  parallel_for(spec.count, [&](std::size_t i) {
    char name[32];
    const SynthSample s = generate_sample(spec, i);
    std::snprintf(name, sizeof name, "img_%04zu.pgm", i);
    write_pgm(dir / name, s.image);
    std::snprintf(name, sizeof name, "msk_%04zu.pgm", i);
    write_pgm(dir / name, s.mask);
  });
}

}  // namespace tecnet
