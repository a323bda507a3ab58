#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tecnet/tensor.hpp"

namespace tecnet {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<NamedTensor>;

/// Deterministic generator used for initialization and data synthesis.
using Rng = std::mt19937_64;

/// Leaf tensor with requires_grad set, filled with U(-b, b), b = sqrt(3 / fan_in).
Tensor uniform_parameter(Shape shape, std::size_t fan_in, Rng& rng);
/// Leaf tensor with requires_grad set and every entry equal to `value`.
Tensor constant_parameter(Shape shape, double value);

std::size_t count_elements(const ParameterList& params);

/// Appends `src` to `dst`, prefixing each name with `prefix` + ".".
void append_prefixed(ParameterList& dst, const std::string& prefix, const ParameterList& src);

}  // namespace tecnet
