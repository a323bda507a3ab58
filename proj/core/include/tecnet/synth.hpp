#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "tecnet/pgm.hpp"

namespace tecnet {

enum class ShapeFamily { ellipse, blob_union };

/// Parameters of the synthetic low-contrast segmentation task.
struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t count = 8;
  std::size_t size = 64;
  ShapeFamily family = ShapeFamily::ellipse;
  /// Foreground minus background intensity, in (0, 1].
  double gap = 0.6;
  /// Standard deviation of the additive Gaussian noise.
  double noise = 0.05;
  /// Peak-to-peak amplitude of the linear background ramp.
  double gradient = 0.1;
};

struct SynthSample {
  GrayImage image;
  GrayImage mask;  // values in {0, 255}
};

ShapeFamily parse_shape_family(const std::string& name);

/// Sample `index`, a pure function of (spec, index).
SynthSample generate_sample(const SynthSpec& spec, std::size_t index);

/// Writes img_%04d.pgm / msk_%04d.pgm for every index into `dir`.
void generate(const SynthSpec& spec, const std::filesystem::path& dir);

}  // namespace tecnet
