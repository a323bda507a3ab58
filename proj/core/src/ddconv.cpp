#include "tecnet/ddconv.hpp"

#include <algorithm>
#include <string>

#include "tecnet/errors.hpp"

namespace tecnet {

DDConvLayer::DDConvLayer(const DDConvOptions& o, Rng& rng) : options_(o) {
  if (o.kernel % 2 == 0) throw ConfigError("DDConv kernel size must be odd");
  if (o.n_kernels == 0) throw ConfigError("DDConv needs at least one candidate kernel");
  if (o.temperature <= 0.0) throw ConfigError("DDConv temperature must be positive");
  const std::size_t k = o.kernel, taps = k * k;
  kernels_ = Tensor({o.n_kernels, o.out_channels, o.in_channels, k, k});
  for (std::size_t i = 0; i < o.n_kernels; ++i) {
    Tensor w = uniform_parameter({o.out_channels * o.in_channels * taps}, o.in_channels * taps, rng);
    std::copy(w.values().begin(), w.values().end(),
              kernels_.mutable_values().begin() + static_cast<long>(i * w.numel()));
  }
  kernels_.set_requires_grad(true);
  bias_ = constant_parameter({o.out_channels}, 0.0);
  offset_weight_ = constant_parameter({2 * taps, o.in_channels, k, k}, 0.0);
  offset_bias_ = constant_parameter({2 * taps}, 0.0);
  attention_weight_ = uniform_parameter({o.in_channels, o.n_kernels}, o.in_channels, rng);
  attention_bias_ = constant_parameter({o.n_kernels}, 0.0);
}

namespace {

std::size_t same_padding_total(std::size_t in, std::size_t kernel, std::size_t stride) {
  const std::size_t out = (in + stride - 1) / stride;
  const std::size_t need = (out - 1) * stride + kernel;
  return need > in ? need - in : 0;
}

void require_channels(const Tensor& x, std::size_t c) {
  if (x.ndim() != 3 || x.dim(0) != c) {
    throw ConfigError("DDConv expects " + std::to_string(c) + " input channels, got shape " +
                      shape_string(x.shape()));
  }
}

}  // namespace

Conv2dGeometry DDConvLayer::geometry() const {
  if (options_.stride == 1) return {1, options_.kernel / 2};
  return {options_.stride, 0};
}

Tensor DDConvLayer::padded_input(const Tensor& x) const {
  if (options_.stride == 1) return x;
  const std::size_t ph = same_padding_total(x.dim(1), options_.kernel, options_.stride);
  const std::size_t pw = same_padding_total(x.dim(2), options_.kernel, options_.stride);
  if (ph == 0 && pw == 0) return x;
  return pad2d(x, ph / 2, ph - ph / 2, pw / 2, pw - pw / 2);
}

std::size_t DDConvLayer::output_extent(const DDConvOptions& o, std::size_t in) {
  return (in + o.stride - 1) / o.stride;
}

OffsetField DDConvLayer::predict_offsets(const Tensor& x) const {
  require_channels(x, options_.in_channels);
  return {conv2d(padded_input(x), offset_weight_, offset_bias_, geometry())};
}

Tensor DDConvLayer::kernel_attention(const Tensor& x) const {
  require_channels(x, options_.in_channels);
  Tensor pooled = reshape(global_avg_pool(x), {1, options_.in_channels});
  Tensor logits = linear(pooled, attention_weight_, attention_bias_);
  Tensor alpha = softmax(scale(logits, 1.0 / options_.temperature), 1);
  return reshape(alpha, {options_.n_kernels});
}

Tensor DDConvLayer::effective_kernel(const Tensor& alpha) const {
  const std::size_t n = options_.n_kernels, k = options_.kernel;
  const std::size_t per = kernels_.numel() / n;
  Tensor mixed = matmul(reshape(alpha, {1, n}), reshape(kernels_, {n, per}));
  return reshape(mixed, {options_.out_channels, options_.in_channels, k, k});
}

Tensor DDConvLayer::forward(const Tensor& x) const {
  require_channels(x, options_.in_channels);
  Tensor w = effective_kernel(kernel_attention(x));
  Tensor xp = padded_input(x);
  Tensor offsets = conv2d(xp, offset_weight_, offset_bias_, geometry());
  return deform_conv2d(xp, offsets, w, bias_, geometry());
}

std::vector<std::pair<int, int>> DDConvLayer::sampling_set() const {
  std::vector<std::pair<int, int>> s;
  const int k = static_cast<int>(options_.kernel);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) s.emplace_back(i, j);
  }
  return s;
}

ParameterList DDConvLayer::parameters() const {
  return {{"kernels", kernels_},
          {"bias", bias_},
          {"offset.weight", offset_weight_},
          {"offset.bias", offset_bias_},
          {"attention.weight", attention_weight_},
          {"attention.bias", attention_bias_}};
}

std::size_t DDConvLayer::parameter_count(const DDConvOptions& o) {
  const std::size_t taps = o.kernel * o.kernel;
  return o.n_kernels * o.out_channels * o.in_channels * taps + o.out_channels +
         2 * taps * o.in_channels * taps + 2 * taps + o.in_channels * o.n_kernels + o.n_kernels;
}

std::uint64_t DDConvLayer::mac_count(const DDConvOptions& o, std::size_t h, std::size_t w) {
  const std::uint64_t ho = output_extent(o, h);
  const std::uint64_t wo = output_extent(o, w);
  const std::uint64_t taps = o.kernel * o.kernel;
  const std::uint64_t offsets = 2 * taps * o.in_channels * taps * ho * wo;
  const std::uint64_t attention = o.in_channels * o.n_kernels;
  const std::uint64_t mixing = o.n_kernels * o.out_channels * o.in_channels * taps;
  const std::uint64_t conv = o.out_channels * o.in_channels * taps * ho * wo;
  return offsets + attention + mixing + conv;
}

}  // namespace tecnet
