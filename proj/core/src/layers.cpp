#include "tecnet/layers.hpp"

#include <algorithm>

namespace tecnet {

LinearLayer::LinearLayer(std::size_t in, std::size_t out, bool with_bias, Rng& rng)
    : weight_(uniform_parameter({in, out}, in, rng)) {
  if (with_bias) bias_ = constant_parameter({out}, 0.0);
}

ParameterList LinearLayer::parameters() const {
  ParameterList p{{"weight", weight_}};
  if (bias_.defined()) p.push_back({"bias", bias_});
  return p;
}

void LinearLayer::zero() {
  for (const auto& p : parameters()) {
    Tensor t = p.tensor;
    std::ranges::fill(t.mutable_values(), 0.0);
  }
}

LayerNormLayer::LayerNormLayer(std::size_t d)
    : gain_(constant_parameter({d}, 1.0)), bias_(constant_parameter({d}, 0.0)) {}

ParameterList LayerNormLayer::parameters() const { return {{"gain", gain_}, {"bias", bias_}}; }

Conv2dLayer::Conv2dLayer(std::size_t in, std::size_t out, std::size_t kernel,
                         Conv2dGeometry geometry, Rng& rng)
    : weight_(uniform_parameter({out, in, kernel, kernel}, in * kernel * kernel, rng)),
      bias_(constant_parameter({out}, 0.0)),
      geometry_(geometry) {}

ParameterList Conv2dLayer::parameters() const { return {{"weight", weight_}, {"bias", bias_}}; }

void Conv2dLayer::zero() {
  std::ranges::fill(weight_.mutable_values(), 0.0);
  std::ranges::fill(bias_.mutable_values(), 0.0);
}

Tensor to_tokens(const Tensor& x) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  return reshape(permute(x, {1, 2, 0}), {h * w, c});
}

Tensor from_tokens(const Tensor& tokens, std::size_t h, std::size_t w) {
  const std::size_t c = tokens.dim(1);
  return permute(reshape(tokens, {h, w, c}), {2, 0, 1});
}

Tensor channel_layernorm(const LayerNormLayer& norm, const Tensor& x) {
  return from_tokens(norm.forward(to_tokens(x)), x.dim(1), x.dim(2));
}

}  // namespace tecnet
