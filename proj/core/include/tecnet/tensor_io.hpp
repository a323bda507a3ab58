#pragma once

#include <filesystem>
#include <iosfwd>

#include "tecnet/tensor.hpp"

namespace tecnet {

/// Binary tensor dump: "TECT", u32 ndim, ndim x u32 extents, then row-major
/// f32 values; all integers and floats little-endian. Values are narrowed
/// from double on write.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

/// Bytes write_tensor emits for a tensor of this shape.
std::size_t tensor_record_size(const Shape& shape);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace tecnet
