#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tecnet {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

/// Binary (P5) PGM with maxval 255.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
/// Reads binary PGM with maxval <= 255; comments in the header are skipped.
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace tecnet
