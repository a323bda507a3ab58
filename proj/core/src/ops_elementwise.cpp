#include <algorithm>
#include <cmath>
#include <numbers>

#include "op_util.hpp"
#include "tecnet/ops.hpp"

namespace tecnet {

using detail::TensorImpl;
using detail::wants_grad;

namespace {

bool is_suffix(const Shape& full, const Shape& suffix) {
  if (suffix.size() > full.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

template <typename Fwd, typename Dx>
Tensor unary(const Tensor& x, Fwd fwd, Dx dx) {
  std::vector<double> v(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fwd(xv[i]);
  Tensor out(x.shape(), std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [xi, oi, dx] {
    auto gx = xi->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += oi->grad[i] * dx(xi->values[i], oi->values[i]);
  });
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() && !is_suffix(a.shape(), b.shape())) {
    throw DimensionError("add: shape " + shape_string(b.shape()) +
                         " does not broadcast onto " + shape_string(a.shape()));
  }
  const std::size_t inner = b.numel();
  std::vector<double> v(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[i % inner];
  Tensor out(a.shape(), std::move(v));
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {a, b}, [ai, bi, oi, inner] {
    const auto& g = oi->grad;
    if (wants_grad(ai)) {
      auto ga = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (wants_grad(bi)) {
      auto gb = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % inner] += g[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
  Tensor out(a.shape(), std::move(v));
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {a, b}, [ai, bi, oi] {
    const auto& g = oi->grad;
    if (wants_grad(ai)) {
      auto ga = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (wants_grad(bi)) {
      auto gb = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * b[i];
  Tensor out(a.shape(), std::move(v));
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {a, b}, [ai, bi, oi] {
    const auto& g = oi->grad;
    if (wants_grad(ai)) {
      auto ga = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bi->values[i];
    }
    if (wants_grad(bi)) {
      auto gb = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ai->values[i];
    }
  });
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "div");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] / b[i];
  Tensor out(a.shape(), std::move(v));
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {a, b}, [ai, bi, oi] {
    const auto& g = oi->grad;
    if (wants_grad(ai)) {
      auto ga = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / bi->values[i];
    }
    if (wants_grad(bi)) {
      auto gb = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[i] -= g[i] * oi->values[i] / bi->values[i];
      }
    }
  });
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return x * factor; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.numel() != 1) {
    throw DimensionError("scale_by: factor must have one element, got " + shape_string(s.shape()));
  }
  const double f = s[0];
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * f;
  Tensor out(a.shape(), std::move(v));
  TensorImpl* ai = a.impl();
  TensorImpl* si = s.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {a, s}, [ai, si, oi] {
    const auto& g = oi->grad;
    if (wants_grad(ai)) {
      auto ga = ai->grad_buffer();
      const double f = si->values[0];
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * f;
    }
    if (wants_grad(si)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * ai->values[i];
      si->grad_buffer()[0] += acc;
    }
  });
  return out;
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [inv_sqrt2pi](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
        return cdf + v * inv_sqrt2pi * std::exp(-0.5 * v * v);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor out = Tensor::scalar(acc);
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [xi, oi] {
    auto gx = xi->grad_buffer();
    const double g = oi->grad[0];
    for (double& v : gx) v += g;
  });
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor weighted_sum(const std::vector<Tensor>& xs, const Tensor& weights) {
  if (xs.empty()) throw UsageError("weighted_sum: no operands");
  if (weights.numel() != xs.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(xs.size()) + " operands but weights " +
                         shape_string(weights.shape()));
  }
  for (const Tensor& t : xs) detail::require_same_shape(xs[0], t, "weighted_sum");
  std::vector<double> v(xs[0].numel(), 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double w = weights[k];
    auto xv = xs[k].values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * xv[i];
  }
  Tensor out(xs[0].shape(), std::move(v));
  std::vector<TensorImpl*> in;
  std::vector<Tensor> operands(xs);
  for (const Tensor& t : xs) in.push_back(t.impl());
  operands.push_back(weights);
  TensorImpl* wi = weights.impl();
  TensorImpl* oi = out.impl();
  record_op(out, operands, [in, wi, oi] {
    const auto& g = oi->grad;
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (wants_grad(in[k])) {
        auto gx = in[k]->grad_buffer();
        const double w = wi->values[k];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += w * g[i];
      }
      if (wants_grad(wi)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * in[k]->values[i];
        wi->grad_buffer()[k] += acc;
      }
    }
  });
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.ndim()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_string(x.shape()));
  }
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  auto xv = x.values();
  std::vector<double> v(x.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double m = xv[base];
      for (std::size_t k = 1; k < n; ++k) m = std::max(m, xv[base + k * inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double e = std::exp(xv[base + k * inner] - m);
        v[base + k * inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < n; ++k) v[base + k * inner] /= z;
    }
  }
  Tensor out(s, std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [xi, oi, outer, inner, n] {
    auto gx = xi->grad_buffer();
    const auto& y = oi->values;
    const auto& g = oi->grad;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += g[base + k * inner] * y[base + k * inner];
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t i = base + k * inner;
          gx[i] += y[i] * (g[i] - dot);
        }
      }
    }
  });
  return out;
}

}  // namespace tecnet
