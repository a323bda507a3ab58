#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "tecnet/pgm.hpp"
#include "tecnet/tensor.hpp"

namespace tecnet {

/// Grayscale image in [0, 1] and its binary mask, both 1 x H x W.
struct SegSample {
  std::string id;
  Tensor image;
  Tensor mask;
};

SegSample sample_from_images(const std::string& id, const GrayImage& image, const GrayImage& mask);

/// Loads every img_NNNN.pgm / msk_NNNN.pgm pair of a directory, sorted by id.
std::vector<SegSample> load_dataset(const std::filesystem::path& dir);

struct DatasetSplit {
  std::vector<SegSample> train;
  std::vector<SegSample> validation;
};

/// Deterministic split: the last ceil(fraction * n) samples are held out.
/// A fraction of 0 yields an empty validation set.
DatasetSplit split_dataset(const std::vector<SegSample>& samples, double fraction);

}  // namespace tecnet
