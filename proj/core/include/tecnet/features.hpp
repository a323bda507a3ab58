#pragma once

#include <filesystem>
#include <vector>

#include "tecnet/model.hpp"
#include "tecnet/pgm.hpp"

namespace tecnet {

/// Channel mean of a C x h x w map, bilinearly resized to size x size and
/// min-max scaled to 0..255 (a constant map becomes all zeros).
GrayImage feature_image(const Tensor& feature, std::size_t size);

/// Writes stage{i}_cnn.pgm and stage{i}_trans.pgm for every stage feature;
/// returns the written paths.
std::vector<std::filesystem::path> write_stage_features(const std::vector<StageFeature>& features,
                                                        std::size_t size,
                                                        const std::filesystem::path& dir);

}  // namespace tecnet
