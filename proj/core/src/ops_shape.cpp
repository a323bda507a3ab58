#include <algorithm>
#include <numeric>

#include "op_util.hpp"
#include "tecnet/ops.hpp"

namespace tecnet {

using detail::TensorImpl;
using detail::wants_grad;

namespace {

// Generic index remap: out[i] = in[src[i]]. Backward scatters.
Tensor remap(const Tensor& x, Shape shape, std::shared_ptr<std::vector<std::size_t>> src) {
  auto xv = x.values();
  std::vector<double> v(src->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xv[(*src)[i]];
  Tensor out(std::move(shape), std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [xi, oi, src] {
    auto gx = xi->grad_buffer();
    const auto& g = oi->grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[(*src)[i]] += g[i];
  });
  return out;
}

std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

}  // namespace

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()));
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [xi, oi] {
    auto gx = xi->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += oi->grad[i];
  });
  return out;
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& in = x.shape();
  if (axes.size() != in.size()) {
    throw DimensionError("permute: " + std::to_string(axes.size()) + " axes for shape " +
                         shape_string(in));
  }
  std::vector<bool> seen(in.size(), false);
  for (std::size_t a : axes) {
    if (a >= in.size() || seen[a]) throw DimensionError("permute: axes are not a permutation");
    seen[a] = true;
  }
  Shape out_shape(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out_shape[i] = in[axes[i]];
  const auto in_strides = strides_of(in);
  std::vector<std::size_t> src_stride(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) src_stride[i] = in_strides[axes[i]];

  auto src = std::make_shared<std::vector<std::size_t>>(x.numel());
  std::vector<std::size_t> idx(in.size(), 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < src->size(); ++i) {
    (*src)[i] = offset;
    for (std::size_t d = in.size(); d-- > 0;) {
      ++idx[d];
      offset += src_stride[d];
      if (idx[d] < out_shape[d]) break;
      offset -= src_stride[d] * idx[d];
      idx[d] = 0;
    }
  }
  return remap(x, std::move(out_shape), std::move(src));
}

Tensor concat(const std::vector<Tensor>& xs, std::size_t axis) {
  if (xs.empty()) throw UsageError("concat: no operands");
  const Shape& first = xs[0].shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& t : xs) {
    if (t.ndim() != first.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && t.dim(d) != first[d]) {
        throw DimensionError("concat: shape " + shape_string(t.shape()) + " vs " +
                             shape_string(first));
      }
    }
    out_shape[axis] += t.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  const std::size_t out_row = out_shape[axis] * inner;

  std::vector<double> v(shape_numel(out_shape));
  std::vector<std::size_t> starts;
  std::size_t start = 0;
  for (const Tensor& t : xs) {
    starts.push_back(start);
    const std::size_t row = t.dim(axis) * inner;
    auto tv = t.values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(tv.data() + o * row, row, v.data() + o * out_row + start * inner);
    }
    start += t.dim(axis);
  }
  Tensor out(out_shape, std::move(v));
  std::vector<TensorImpl*> in;
  std::vector<std::size_t> rows;
  for (const Tensor& t : xs) {
    in.push_back(t.impl());
    rows.push_back(t.dim(axis) * inner);
  }
  TensorImpl* oi = out.impl();
  record_op(out, xs, [in, rows, starts, oi, outer, inner, out_row] {
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (!wants_grad(in[k])) continue;
      auto gx = in[k]->grad_buffer();
      for (std::size_t o = 0; o < outer; ++o) {
        const double* g = oi->grad.data() + o * out_row + starts[k] * inner;
        double* dst = gx.data() + o * rows[k];
        for (std::size_t i = 0; i < rows[k]; ++i) dst[i] += g[i];
      }
    }
  });
  return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.ndim() || length == 0 || start + length > x.dim(axis)) {
    throw DimensionError("slice: [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") on axis " + std::to_string(axis) +
                         " of " + shape_string(x.shape()));
  }
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  Shape out_shape = s;
  out_shape[axis] = length;
  auto src = std::make_shared<std::vector<std::size_t>>();
  src->reserve(shape_numel(out_shape));
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t a = 0; a < length; ++a) {
      const std::size_t base = (o * s[axis] + start + a) * inner;
      for (std::size_t i = 0; i < inner; ++i) src->push_back(base + i);
    }
  }
  return remap(x, std::move(out_shape), std::move(src));
}

Tensor pad2d(const Tensor& x, std::size_t top, std::size_t bottom, std::size_t left,
             std::size_t right) {
  detail::require_rank(x, 3, "pad2d");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t ho = h + top + bottom, wo = w + left + right;
  std::vector<double> v(c * ho * wo, 0.0);
  auto xv = x.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      std::copy_n(xv.data() + (ch * h + y) * w, w, v.data() + (ch * ho + y + top) * wo + left);
    }
  }
  Tensor out({c, ho, wo}, std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [xi, oi, c, h, w, ho, wo, top, left] {
    auto gx = xi->grad_buffer();
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        const double* g = oi->grad.data() + (ch * ho + y + top) * wo + left;
        double* dst = gx.data() + (ch * h + y) * w;
        for (std::size_t i = 0; i < w; ++i) dst[i] += g[i];
      }
    }
  });
  return out;
}

Tensor roll2d(const Tensor& x, long dy, long dx) {
  detail::require_rank(x, 3, "roll2d");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const long hl = static_cast<long>(h), wl = static_cast<long>(w);
  auto src = std::make_shared<std::vector<std::size_t>>(x.numel());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (long y = 0; y < hl; ++y) {
      const long sy = ((y - dy) % hl + hl) % hl;
      for (long xx = 0; xx < wl; ++xx) {
        const long sx = ((xx - dx) % wl + wl) % wl;
        (*src)[(ch * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(xx)] =
            (ch * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx);
      }
    }
  }
  return remap(x, x.shape(), std::move(src));
}

Tensor gather(const Tensor& table, const std::vector<std::size_t>& indices, Shape shape) {
  if (shape_numel(shape) != indices.size()) {
    throw DimensionError("gather: " + std::to_string(indices.size()) + " indices for shape " +
                         shape_string(shape));
  }
  for (std::size_t i : indices) {
    if (i >= table.numel()) throw DimensionError("gather: index out of range");
  }
  return remap(table, std::move(shape), std::make_shared<std::vector<std::size_t>>(indices));
}

Tensor global_avg_pool(const Tensor& x) {
  detail::require_rank(x, 3, "global_avg_pool");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  std::vector<double> v(c, 0.0);
  auto xv = x.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += xv[ch * hw + i];
    v[ch] = acc / static_cast<double>(hw);
  }
  Tensor out({c}, std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [xi, oi, c, hw] {
    auto gx = xi->grad_buffer();
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double g = oi->grad[ch] / static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) gx[ch * hw + i] += g;
    }
  });
  return out;
}

}  // namespace tecnet
