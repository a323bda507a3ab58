#include <cmath>

#include "gemm.hpp"
#include "op_util.hpp"
#include "tecnet/mac_counter.hpp"
#include "tecnet/ops.hpp"

namespace tecnet {

using detail::TensorImpl;
using detail::wants_grad;
using detail::gemm_nn;
using detail::gemm_nt;
using detail::gemm_tn;

Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner extents disagree, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor out({m, n});
  gemm_nn(a.values().data(), b.values().data(), out.mutable_values().data(), m, k, n);
  count_macs(static_cast<std::uint64_t>(m) * k * n);
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {a, b}, [ai, bi, oi, m, k, n] {
    const double* g = oi->grad.data();
    if (wants_grad(ai)) gemm_nt(g, bi->values.data(), ai->grad_buffer().data(), m, n, k);
    if (wants_grad(bi)) gemm_tn(ai->values.data(), g, bi->grad_buffer().data(), m, k, n);
  });
  return out;
}

Tensor batched_matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
  detail::require_rank(a, 3, "batched_matmul");
  detail::require_rank(b, 3, "batched_matmul");
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  const std::size_t bk = transpose_b ? b.dim(2) : b.dim(1);
  if (b.dim(0) != batch || bk != k) {
    throw DimensionError("batched_matmul: extents disagree, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + (transpose_b ? "^T" : ""));
  }
  Tensor out({batch, m, n});
  const double* av = a.values().data();
  const double* bv = b.values().data();
  double* ov = out.mutable_values().data();
  for (std::size_t s = 0; s < batch; ++s) {
    if (transpose_b) {
      gemm_nt(av + s * m * k, bv + s * n * k, ov + s * m * n, m, k, n);
    } else {
      gemm_nn(av + s * m * k, bv + s * k * n, ov + s * m * n, m, k, n);
    }
  }
  count_macs(static_cast<std::uint64_t>(batch) * m * k * n);
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {a, b}, [ai, bi, oi, batch, m, k, n, transpose_b] {
    const double* g = oi->grad.data();
    for (std::size_t s = 0; s < batch; ++s) {
      const double* gs = g + s * m * n;
      const double* as = ai->values.data() + s * m * k;
      const double* bs = bi->values.data() + s * k * n;
      if (wants_grad(ai)) {
        double* ga = ai->grad_buffer().data() + s * m * k;
        if (transpose_b) {
          gemm_nn(gs, bs, ga, m, n, k);  // g[m x n] * b[n x k]
        } else {
          gemm_nt(gs, bs, ga, m, n, k);  // g[m x n] * b[k x n]^T
        }
      }
      if (wants_grad(bi)) {
        double* gb = bi->grad_buffer().data() + s * k * n;
        if (transpose_b) {
          gemm_tn(gs, as, gb, m, n, k);  // g^T[n x m] * a[m x k]
        } else {
          gemm_tn(as, gs, gb, m, k, n);  // a^T[k x m] * g[m x n]
        }
      }
    }
  });
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  detail::require_rank(x, 2, "linear");
  detail::require_rank(w, 2, "linear");
  const std::size_t rows = x.dim(0), in = x.dim(1), outd = w.dim(1);
  if (w.dim(0) != in) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + " vs weight " +
                         shape_string(w.shape()));
  }
  if (bias.defined() && bias.numel() != outd) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) + " vs weight " +
                         shape_string(w.shape()));
  }
  Tensor out({rows, outd});
  double* ov = out.mutable_values().data();
  if (bias.defined()) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < outd; ++j) ov[r * outd + j] = bias[j];
    }
  }
  gemm_nn(x.values().data(), w.values().data(), ov, rows, in, outd);
  count_macs(static_cast<std::uint64_t>(rows) * in * outd);
  TensorImpl* xi = x.impl();
  TensorImpl* wi = w.impl();
  TensorImpl* bi = bias.defined() ? bias.impl() : nullptr;
  TensorImpl* oi = out.impl();
  record_op(out, {x, w, bias}, [xi, wi, bi, oi, rows, in, outd] {
    const double* g = oi->grad.data();
    if (wants_grad(xi)) gemm_nt(g, wi->values.data(), xi->grad_buffer().data(), rows, outd, in);
    if (wants_grad(wi)) gemm_tn(xi->values.data(), g, wi->grad_buffer().data(), rows, in, outd);
    if (wants_grad(bi)) {
      auto gb = bi->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < outd; ++j) gb[j] += g[r * outd + j];
      }
    }
  });
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.ndim() == 0) throw DimensionError("layernorm: scalar input");
  const std::size_t d = x.shape().back();
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError("layernorm: gain/bias " + shape_string(gain.shape()) + "/" +
                         shape_string(bias.shape()) + " vs feature extent " + std::to_string(d));
  }
  const std::size_t rows = x.numel() / d;
  auto xv = x.values();
  std::vector<double> v(x.numel());
  // Normalized values and inverse std are kept for the backward rule.
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      v[r * d + j] = h * gain[j] + bias[j];
    }
  }
  Tensor out(x.shape(), std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* gi = gain.impl();
  TensorImpl* bi = bias.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x, gain, bias}, [xi, gi, bi, oi, xhat, inv_std, rows, d] {
    const auto& g = oi->grad;
    const double dd = static_cast<double>(d);
    if (wants_grad(gi)) {
      auto gg = gi->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * (*xhat)[r * d + j];
      }
    }
    if (wants_grad(bi)) {
      auto gb = bi->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
      }
    }
    if (wants_grad(xi)) {
      auto gx = xi->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double gh = g[r * d + j] * gi->values[j];
          s1 += gh;
          s2 += gh * (*xhat)[r * d + j];
        }
        const double is = (*inv_std)[r];
        for (std::size_t j = 0; j < d; ++j) {
          const double gh = g[r * d + j] * gi->values[j];
          gx[r * d + j] += is * (gh - s1 / dd - (*xhat)[r * d + j] * s2 / dd);
        }
      }
    }
  });
  return out;
}

}  // namespace tecnet
