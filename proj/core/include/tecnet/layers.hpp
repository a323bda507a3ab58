#pragma once

#include <cstddef>

#include "tecnet/ops.hpp"
#include "tecnet/parameters.hpp"

namespace tecnet {

/// Dense map over the last axis of an N x in token matrix.
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(std::size_t in, std::size_t out, bool with_bias, Rng& rng);

  Tensor forward(const Tensor& x) const { return linear(x, weight_, bias_); }
  ParameterList parameters() const;
  /// Sets every weight and bias entry to zero (identity-start residual paths).
  void zero();

  std::size_t in_features() const { return weight_.dim(0); }
  std::size_t out_features() const { return weight_.dim(1); }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

  static std::size_t parameter_count(std::size_t in, std::size_t out, bool with_bias) {
    return in * out + (with_bias ? out : 0);
  }

 private:
  Tensor weight_;
  Tensor bias_;
};

class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  explicit LayerNormLayer(std::size_t d);

  Tensor forward(const Tensor& x) const { return layernorm(x, gain_, bias_); }
  ParameterList parameters() const;
  static std::size_t parameter_count(std::size_t d) { return 2 * d; }

 private:
  Tensor gain_;
  Tensor bias_;
};

/// Square-kernel convolution with bias over C x H x W maps.
class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(std::size_t in, std::size_t out, std::size_t kernel, Conv2dGeometry geometry,
              Rng& rng);

  Tensor forward(const Tensor& x) const { return conv2d(x, weight_, bias_, geometry_); }
  ParameterList parameters() const;
  void zero();

  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  const Conv2dGeometry& geometry() const { return geometry_; }

  static std::size_t parameter_count(std::size_t in, std::size_t out, std::size_t kernel) {
    return kernel * kernel * in * out + out;
  }

 private:
  Tensor weight_;
  Tensor bias_;
  Conv2dGeometry geometry_;
};

/// Layer norm over the channel axis of a C x H x W map.
Tensor channel_layernorm(const LayerNormLayer& norm, const Tensor& x);

/// C x H x W  ->  (H*W) x C token matrix, and back.
Tensor to_tokens(const Tensor& x);
Tensor from_tokens(const Tensor& tokens, std::size_t h, std::size_t w);

}  // namespace tecnet
