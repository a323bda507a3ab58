#include "tecnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tecnet/errors.hpp"
#include "tecnet/ops.hpp"

namespace tecnet {

GrayImage feature_image(const Tensor& feature, std::size_t size) {
  if (feature.ndim() != 3) throw DimensionError("feature map must be C x h x w");
  const std::size_t c = feature.dim(0), h = feature.dim(1), w = feature.dim(2);
  std::vector<double> avg(h * w, 0.0);
  auto v = feature.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < h * w; ++i) avg[i] += v[ch * h * w + i];
  }
  for (double& a : avg) a /= static_cast<double>(c);

  std::vector<double> resized(size * size);
  const double sy = static_cast<double>(h) / static_cast<double>(size);
  const double sx = static_cast<double>(w) / static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      // Half-pixel aligned source coordinates, clamped at the border.
      const double py = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, double(h - 1));
      const double px = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, double(w - 1));
      resized[y * size + x] = bilinear_at(avg.data(), h, w, py, px);
    }
  }
  const auto [lo, hi] = std::minmax_element(resized.begin(), resized.end());
  const double span = *hi - *lo;
  GrayImage img{size, size, std::vector<std::uint8_t>(size * size, 0)};
  if (span > 0.0) {
    for (std::size_t i = 0; i < resized.size(); ++i) {
      img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (resized[i] - *lo) / span));
    }
  }
  return img;
}

std::vector<std::filesystem::path> write_stage_features(const std::vector<StageFeature>& features,
                                                        std::size_t size,
                                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const StageFeature& f : features) {
    const std::string name = "stage" + std::to_string(f.stage) +
                             (f.branch == Branch::cnn ? "_cnn.pgm" : "_trans.pgm");
    const auto path = dir / name;
    write_pgm(path, feature_image(f.tensor, size));
    written.push_back(path);
  }
  return written;
}

}  // namespace tecnet
