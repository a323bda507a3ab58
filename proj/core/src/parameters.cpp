#include "tecnet/parameters.hpp"

#include <cmath>

namespace tecnet {

Tensor uniform_parameter(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(3.0 / static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.mutable_values()) v = dist(rng);
  t.set_requires_grad(true);
  return t;
}

Tensor constant_parameter(Shape shape, double value) {
  Tensor t = Tensor::full(std::move(shape), value);
  t.set_requires_grad(true);
  return t;
}

std::size_t count_elements(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

void append_prefixed(ParameterList& dst, const std::string& prefix, const ParameterList& src) {
  for (const auto& p : src) dst.push_back({prefix + "." + p.name, p.tensor});
}

}  // namespace tecnet
