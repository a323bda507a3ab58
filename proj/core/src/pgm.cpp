#include "tecnet/pgm.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "tecnet/errors.hpp"

namespace tecnet {

namespace {

std::size_t read_header_number(std::istream& in, const std::filesystem::path& path) {
  int ch = in.peek();
  while (ch != EOF && (std::isspace(ch) || ch == '#')) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      in.get();
    }
    ch = in.peek();
  }
  std::size_t v = 0;
  if (!(in >> v)) throw IoError("malformed PGM header in " + path.string());
  return v;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw UsageError("PGM image buffer does not match its extents");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') throw IoError(path.string() + " is not a binary PGM");
  GrayImage img;
  img.width = read_header_number(in, path);
  img.height = read_header_number(in, path);
  const std::size_t maxval = read_header_number(in, path);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 255) {
    throw IoError("unsupported PGM geometry or depth in " + path.string());
  }
  in.get();  // single whitespace before the raster
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw IoError("truncated PGM raster in " + path.string());
  return img;
}

}  // namespace tecnet
