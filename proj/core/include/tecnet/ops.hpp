#pragma once

// Differentiable primitives. Every function allocates its result and, when a
// tape is active and some input requires a gradient, records a backward rule.
// Layout conventions: feature maps are C x H x W, token matrices are N x d.

#include <cstddef>
#include <vector>

#include "tecnet/tensor.hpp"

namespace tecnet {

// Elementwise -------------------------------------------------------------

/// a + b. `b` may also have a shape equal to a trailing suffix of `a`'s
/// shape, in which case it is broadcast over the leading axes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
/// a * s where s is a single-element tensor.
Tensor scale_by(const Tensor& a, const Tensor& s);

Tensor relu(const Tensor& x);
/// Exact (erf-based) GELU.
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// sum_i weights[i] * xs[i]; all xs share one shape, weights has xs.size() entries.
Tensor weighted_sum(const std::vector<Tensor>& xs, const Tensor& weights);

/// Numerically stable softmax along `axis` (max subtracted per slice).
Tensor softmax(const Tensor& x, std::size_t axis);

// Linear algebra ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
/// Batched product of [B x m x k] with [B x k x n], or with [B x n x k]
/// when transpose_b is set.
Tensor batched_matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);
/// x [N x in] * w [in x out] + bias [out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
/// Normalizes each length-d slice of the last axis, then applies gain and bias.
Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// Shape -------------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape);
/// out.shape[i] = x.shape[axes[i]].
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor concat(const std::vector<Tensor>& xs, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
/// Zero padding of the two trailing axes of a C x H x W tensor.
Tensor pad2d(const Tensor& x, std::size_t top, std::size_t bottom, std::size_t left,
             std::size_t right);
/// Toroidal roll of the two trailing axes: out[c, y, x] = in[c, y - dy, x - dx].
Tensor roll2d(const Tensor& x, long dy, long dx);
/// out[i] = table[indices[i]], out has `shape`.
Tensor gather(const Tensor& table, const std::vector<std::size_t>& indices, Shape shape);
/// Mean over H and W of a C x H x W tensor, giving [C].
Tensor global_avg_pool(const Tensor& x);

// Convolution and sampling ------------------------------------------------

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output extent of a convolution; throws ConfigError when the geometry does
/// not tile the input exactly.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const Conv2dGeometry& g);

/// Cross-correlation with zero padding. x [Cin x H x W], w [Cout x Cin x k x k].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, Conv2dGeometry g = {});
/// Per-channel k x k convolution. w [C x k x k], same padding, stride 1.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias);

/// Bilinear interpolation of every channel at fractional (py, px).
/// Positions outside the map read zeros. py and px are single-element tensors.
Tensor bilinear_sample(const Tensor& x, const Tensor& py, const Tensor& px);

/// Offset-sampled convolution. offsets [2k^2 x Ho x Wo] hold (dy, dx) per tap
/// in row-major tap order; tap (i, j) at output (oy, ox) reads
/// (oy*stride - pad + i + dy, ox*stride - pad + j + dx).
Tensor deform_conv2d(const Tensor& x, const Tensor& offsets, const Tensor& w, const Tensor& bias,
                     Conv2dGeometry g);

Tensor upsample_nearest(const Tensor& x, std::size_t factor);
/// Half-pixel-centered bilinear upsampling with edge clamping.
Tensor upsample_bilinear(const Tensor& x, std::size_t factor);

// Scalar helpers (no tape) --------------------------------------------------

/// Bilinear read of a single H x W plane with zero padding.
double bilinear_at(const double* plane, std::size_t h, std::size_t w, double y, double x);

}  // namespace tecnet
