#include "tecnet/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "tecnet/errors.hpp"

namespace tecnet {

SegSample sample_from_images(const std::string& id, const GrayImage& image, const GrayImage& mask) {
  if (image.width != mask.width || image.height != mask.height) {
    throw DimensionError("sample " + id + ": image and mask extents differ");
  }
  const std::size_t n = image.pixels.size();
  std::vector<double> iv(n), mv(n);
  for (std::size_t i = 0; i < n; ++i) {
    iv[i] = image.pixels[i] / 255.0;
    mv[i] = mask.pixels[i] >= 128 ? 1.0 : 0.0;
  }
  return {id, Tensor({1, image.height, image.width}, std::move(iv)),
          Tensor({1, mask.height, mask.width}, std::move(mv))};
}

std::vector<SegSample> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("no dataset directory " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 8 && name.rfind("img_", 0) == 0 && name.ends_with(".pgm")) {
      ids.push_back(name.substr(4, name.size() - 8));
    }
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw IoError("no img_*.pgm files in " + dir.string());
  std::vector<SegSample> out;
  for (const std::string& id : ids) {
    const auto mask_path = dir / ("msk_" + id + ".pgm");
    if (!std::filesystem::exists(mask_path)) throw IoError("missing mask " + mask_path.string());
    out.push_back(sample_from_images(id, read_pgm(dir / ("img_" + id + ".pgm")), read_pgm(mask_path)));
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<SegSample>& samples, double fraction) {
  if (fraction < 0.0 || fraction >= 1.0) throw ConfigError("validation fraction must lie in [0, 1)");
  const auto held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(samples.size())));
  if (held >= samples.size() && !samples.empty()) {
    throw ConfigError("validation split would leave no training samples");
  }
  DatasetSplit s;
  const std::size_t cut = samples.size() - held;
  s.train.assign(samples.begin(), samples.begin() + static_cast<long>(cut));
  s.validation.assign(samples.begin() + static_cast<long>(cut), samples.end());
  return s;
}

}  // namespace tecnet
