#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "tecnet/ops.hpp"
#include "tecnet/parameters.hpp"

namespace tecnet {

struct DDConvOptions {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t n_kernels = 4;
  std::size_t stride = 1;
  /// Softmax temperature of the kernel-coefficient attention.
  double temperature = 1.0;
};

/// Per-position, per-tap sampling displacements [2k^2 x H x W]. Channel 2m
/// holds dy and channel 2m+1 holds dx of tap m (row-major over the kernel).
struct OffsetField {
  Tensor field;
  std::size_t taps() const { return field.dim(0) / 2; }
};

/// Dynamic deformable convolution.
///
/// The kernel applied to an input is a convex combination of n candidate
/// kernels, with coefficients from a temperature softmax over a linear map of
/// the globally pooled input. Every tap reads the input at its regular grid
/// position plus a learned displacement predicted per output position by a
/// zero-initialized k x k convolution, so a fresh layer behaves like an
/// ordinary convolution with the averaged kernel.
class DDConvLayer {
 public:
  DDConvLayer() = default;
  DDConvLayer(const DDConvOptions& options, Rng& rng);

  /// Displacements for every output position; same spatial extents as the
  /// input when stride is 1.
  OffsetField predict_offsets(const Tensor& x) const;
  /// Coefficients alpha [n] on the probability simplex.
  Tensor kernel_attention(const Tensor& x) const;
  /// sum_i alpha_i * W_i as a [Cout x Cin x k x k] kernel.
  Tensor effective_kernel(const Tensor& alpha) const;
  Tensor forward(const Tensor& x) const;

  /// Regular tap grid {(0,0), (0,1), ..., (k-1,k-1)} relative to the window corner.
  std::vector<std::pair<int, int>> sampling_set() const;

  ParameterList parameters() const;
  const DDConvOptions& options() const { return options_; }

  /// Stacked candidate kernels [n x Cout x Cin x k x k].
  Tensor& kernels() { return kernels_; }
  Tensor& bias() { return bias_; }
  Tensor& offset_weight() { return offset_weight_; }
  Tensor& offset_bias() { return offset_bias_; }
  Tensor& attention_weight() { return attention_weight_; }
  Tensor& attention_bias() { return attention_bias_; }

  static std::size_t parameter_count(const DDConvOptions& o);
  /// Multiply-accumulates of one forward pass on an H x W input.
  static std::uint64_t mac_count(const DDConvOptions& o, std::size_t h, std::size_t w);
  /// Output extent for an input extent: equal for stride 1, ceil(in / stride) otherwise.
  static std::size_t output_extent(const DDConvOptions& o, std::size_t in);

 private:
  // Strided layers pad bottom/right so that every output extent is in / stride
  // rounded up; stride 1 uses symmetric same padding.
  Tensor padded_input(const Tensor& x) const;
  Conv2dGeometry geometry() const;

  DDConvOptions options_;
  Tensor kernels_;
  Tensor bias_;
  Tensor offset_weight_;
  Tensor offset_bias_;
  Tensor attention_weight_;
  Tensor attention_bias_;
};

}  // namespace tecnet
