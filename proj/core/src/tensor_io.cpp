#include "tecnet/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "tecnet/errors.hpp"

namespace tecnet {

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'E', 'C', 'T'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("tensor dump: truncated record");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::size_t tensor_record_size(const Shape& shape) {
  return 4 + 4 + 4 * shape.size() + 4 * shape_numel(shape);
}

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, static_cast<std::uint32_t>(t.ndim()));
  for (std::size_t e : t.shape()) put_u32(os, static_cast<std::uint32_t>(e));
  for (double v : t.values()) put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!os) throw IoError("tensor dump: write failed");
}

Tensor read_tensor(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("tensor dump: bad magic, expected \"TECT\"");
  }
  const std::uint32_t ndim = get_u32(is);
  if (ndim > 16) throw IoError("tensor dump: implausible rank " + std::to_string(ndim));
  Shape shape(ndim);
  for (auto& e : shape) {
    e = get_u32(is);
    if (e == 0) throw IoError("tensor dump: zero extent");
  }
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = static_cast<double>(std::bit_cast<float>(get_u32(is)));
  return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace tecnet
