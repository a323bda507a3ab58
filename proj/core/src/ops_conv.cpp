#include <algorithm>
#include <cmath>

#include "gemm.hpp"
#include "op_util.hpp"
#include "tecnet/mac_counter.hpp"
#include "tecnet/ops.hpp"

namespace tecnet {

using detail::TensorImpl;
using detail::wants_grad;

namespace {

// Corner weights of a bilinear read at (y, x) with zero padding.
struct BilinearTap {
  long y0 = 0;
  long x0 = 0;
  double ly = 0.0;
  double lx = 0.0;
};

BilinearTap make_tap(double y, double x) {
  BilinearTap t;
  const double fy = std::floor(y), fx = std::floor(x);
  t.y0 = static_cast<long>(fy);
  t.x0 = static_cast<long>(fx);
  t.ly = y - fy;
  t.lx = x - fx;
  return t;
}

inline double pixel(const double* plane, long h, long w, long y, long x) {
  return (y >= 0 && y < h && x >= 0 && x < w) ? plane[y * w + x] : 0.0;
}

inline double sample(const double* plane, long h, long w, const BilinearTap& t) {
  const double v00 = pixel(plane, h, w, t.y0, t.x0);
  const double v01 = pixel(plane, h, w, t.y0, t.x0 + 1);
  const double v10 = pixel(plane, h, w, t.y0 + 1, t.x0);
  const double v11 = pixel(plane, h, w, t.y0 + 1, t.x0 + 1);
  return (1 - t.ly) * ((1 - t.lx) * v00 + t.lx * v01) + t.ly * ((1 - t.lx) * v10 + t.lx * v11);
}

// Adds g * d(sample)/d(plane) into gplane and returns (d/dy, d/dx) of the sample.
inline std::pair<double, double> sample_backward(const double* plane, double* gplane, long h,
                                                 long w, const BilinearTap& t, double g) {
  const double v00 = pixel(plane, h, w, t.y0, t.x0);
  const double v01 = pixel(plane, h, w, t.y0, t.x0 + 1);
  const double v10 = pixel(plane, h, w, t.y0 + 1, t.x0);
  const double v11 = pixel(plane, h, w, t.y0 + 1, t.x0 + 1);
  if (gplane != nullptr) {
    const double wts[4] = {(1 - t.ly) * (1 - t.lx), (1 - t.ly) * t.lx, t.ly * (1 - t.lx),
                           t.ly * t.lx};
    const long ys[4] = {t.y0, t.y0, t.y0 + 1, t.y0 + 1};
    const long xs[4] = {t.x0, t.x0 + 1, t.x0, t.x0 + 1};
    for (int c = 0; c < 4; ++c) {
      if (ys[c] >= 0 && ys[c] < h && xs[c] >= 0 && xs[c] < w) gplane[ys[c] * w + xs[c]] += g * wts[c];
    }
  }
  const double dy = (1 - t.lx) * (v10 - v00) + t.lx * (v11 - v01);
  const double dx = (1 - t.ly) * (v01 - v00) + t.ly * (v11 - v10);
  return {dy, dx};
}

void require_kernel(const Tensor& w, std::size_t cin, const char* op) {
  detail::require_rank(w, 4, op);
  if (w.dim(1) != cin || w.dim(2) != w.dim(3)) {
    throw DimensionError(std::string(op) + ": weight " + shape_string(w.shape()) +
                         " incompatible with " + std::to_string(cin) + " input channels");
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const Conv2dGeometry& g) {
  if (g.stride == 0) throw ConfigError("convolution stride must be positive");
  const long span = static_cast<long>(in + 2 * g.padding) - static_cast<long>(kernel);
  if (span < 0 || span % static_cast<long>(g.stride) != 0) {
    throw ConfigError("convolution geometry: extent " + std::to_string(in) + ", kernel " +
                      std::to_string(kernel) + ", padding " + std::to_string(g.padding) +
                      ", stride " + std::to_string(g.stride) + " gives a non-integer output extent");
  }
  return static_cast<std::size_t>(span) / g.stride + 1;
}

double bilinear_at(const double* plane, std::size_t h, std::size_t w, double y, double x) {
  return sample(plane, static_cast<long>(h), static_cast<long>(w), make_tap(y, x));
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, Conv2dGeometry g) {
  detail::require_rank(x, 3, "conv2d");
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  require_kernel(w, cin, "conv2d");
  const std::size_t cout = w.dim(0), k = w.dim(2);
  if (bias.defined() && bias.numel() != cout) throw DimensionError("conv2d: bias extent");
  const std::size_t ho = conv_output_extent(h, k, g), wo = conv_output_extent(wd, k, g);
  const std::size_t kk = cin * k * k, npos = ho * wo;

  auto cols = std::make_shared<std::vector<double>>(kk * npos, 0.0);
  auto xv = x.values();
  const long pad = static_cast<long>(g.padding), stride = static_cast<long>(g.stride);
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        double* row = cols->data() + ((c * k + i) * k + j) * npos;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const long y = static_cast<long>(oy) * stride - pad + static_cast<long>(i);
          if (y < 0 || y >= static_cast<long>(h)) continue;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const long xx = static_cast<long>(ox) * stride - pad + static_cast<long>(j);
            if (xx < 0 || xx >= static_cast<long>(wd)) continue;
            row[oy * wo + ox] = xv[(c * h + static_cast<std::size_t>(y)) * wd + static_cast<std::size_t>(xx)];
          }
        }
      }
    }
  }
  Tensor out({cout, ho, wo});
  double* ov = out.mutable_values().data();
  if (bias.defined()) {
    for (std::size_t o = 0; o < cout; ++o) std::fill_n(ov + o * npos, npos, bias[o]);
  }
  detail::gemm_nn(w.values().data(), cols->data(), ov, cout, kk, npos);
  count_macs(static_cast<std::uint64_t>(cout) * kk * npos);

  TensorImpl* xi = x.impl();
  TensorImpl* wi = w.impl();
  TensorImpl* bi = bias.defined() ? bias.impl() : nullptr;
  TensorImpl* oi = out.impl();
  record_op(out, {x, w, bias}, [=] {
    const double* gout = oi->grad.data();
    if (wants_grad(wi)) detail::gemm_nt(gout, cols->data(), wi->grad_buffer().data(), cout, npos, kk);
    if (wants_grad(bi)) {
      auto gb = bi->grad_buffer();
      for (std::size_t o = 0; o < cout; ++o) {
        double acc = 0.0;
        for (std::size_t p = 0; p < npos; ++p) acc += gout[o * npos + p];
        gb[o] += acc;
      }
    }
    if (wants_grad(xi)) {
      std::vector<double> gcols(kk * npos, 0.0);
      detail::gemm_tn(wi->values.data(), gout, gcols.data(), cout, kk, npos);
      auto gx = xi->grad_buffer();
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t i = 0; i < k; ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            const double* row = gcols.data() + ((c * k + i) * k + j) * npos;
            for (std::size_t oy = 0; oy < ho; ++oy) {
              const long y = static_cast<long>(oy) * stride - pad + static_cast<long>(i);
              if (y < 0 || y >= static_cast<long>(h)) continue;
              for (std::size_t ox = 0; ox < wo; ++ox) {
                const long xx = static_cast<long>(ox) * stride - pad + static_cast<long>(j);
                if (xx < 0 || xx >= static_cast<long>(wd)) continue;
                gx[(c * h + static_cast<std::size_t>(y)) * wd + static_cast<std::size_t>(xx)] +=
                    row[oy * wo + ox];
              }
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias) {
  detail::require_rank(x, 3, "depthwise_conv2d");
  detail::require_rank(w, 3, "depthwise_conv2d");
  const std::size_t c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t k = w.dim(1);
  if (w.dim(0) != c || w.dim(2) != k || k % 2 == 0) {
    throw DimensionError("depthwise_conv2d: weight " + shape_string(w.shape()) + " for input " +
                         shape_string(x.shape()));
  }
  if (bias.defined() && bias.numel() != c) throw DimensionError("depthwise_conv2d: bias extent");
  const long r = static_cast<long>(k / 2);
  const long hl = static_cast<long>(h), wl = static_cast<long>(wd);
  auto xv = x.values();
  auto wv = w.values();
  std::vector<double> v(c * h * wd, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double b = bias.defined() ? bias[ch] : 0.0;
    const double* plane = xv.data() + ch * h * wd;
    const double* ker = wv.data() + ch * k * k;
    for (long y = 0; y < hl; ++y) {
      for (long xx = 0; xx < wl; ++xx) {
        double acc = b;
        for (long i = -r; i <= r; ++i) {
          const long sy = y + i;
          if (sy < 0 || sy >= hl) continue;
          for (long j = -r; j <= r; ++j) {
            const long sx = xx + j;
            if (sx < 0 || sx >= wl) continue;
            acc += ker[(i + r) * static_cast<long>(k) + (j + r)] * plane[sy * wl + sx];
          }
        }
        v[ch * h * wd + static_cast<std::size_t>(y * wl + xx)] = acc;
      }
    }
  }
  count_macs(static_cast<std::uint64_t>(c) * k * k * h * wd);
  Tensor out(x.shape(), std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* wi = w.impl();
  TensorImpl* bi = bias.defined() ? bias.impl() : nullptr;
  TensorImpl* oi = out.impl();
  record_op(out, {x, w, bias}, [=] {
    const auto& g = oi->grad;
    double* gx = wants_grad(xi) ? xi->grad_buffer().data() : nullptr;
    double* gw = wants_grad(wi) ? wi->grad_buffer().data() : nullptr;
    double* gb = wants_grad(bi) ? bi->grad_buffer().data() : nullptr;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* plane = xi->values.data() + ch * h * wd;
      const double* ker = wi->values.data() + ch * k * k;
      for (long y = 0; y < hl; ++y) {
        for (long xx = 0; xx < wl; ++xx) {
          const double go = g[ch * h * wd + static_cast<std::size_t>(y * wl + xx)];
          if (gb) gb[ch] += go;
          for (long i = -r; i <= r; ++i) {
            const long sy = y + i;
            if (sy < 0 || sy >= hl) continue;
            for (long j = -r; j <= r; ++j) {
              const long sx = xx + j;
              if (sx < 0 || sx >= wl) continue;
              const long ki = (i + r) * static_cast<long>(k) + (j + r);
              if (gw) gw[ch * k * k + static_cast<std::size_t>(ki)] += go * plane[sy * wl + sx];
              if (gx) gx[ch * h * wd + static_cast<std::size_t>(sy * wl + sx)] += go * ker[ki];
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor bilinear_sample(const Tensor& x, const Tensor& py, const Tensor& px) {
  detail::require_rank(x, 3, "bilinear_sample");
  if (py.numel() != 1 || px.numel() != 1) {
    throw DimensionError("bilinear_sample: coordinates must be single-element tensors");
  }
  const std::size_t c = x.dim(0);
  const long h = static_cast<long>(x.dim(1)), w = static_cast<long>(x.dim(2));
  const BilinearTap tap = make_tap(py[0], px[0]);
  std::vector<double> v(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    v[ch] = sample(x.values().data() + ch * static_cast<std::size_t>(h * w), h, w, tap);
  }
  Tensor out({c}, std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* yi = py.impl();
  TensorImpl* ci = px.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x, py, px}, [=] {
    double* gx = wants_grad(xi) ? xi->grad_buffer().data() : nullptr;
    double gy = 0.0, gxx = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = ch * static_cast<std::size_t>(h * w);
      auto [dy, dx] = sample_backward(xi->values.data() + off, gx ? gx + off : nullptr, h, w, tap,
                                      oi->grad[ch]);
      gy += oi->grad[ch] * dy;
      gxx += oi->grad[ch] * dx;
    }
    if (wants_grad(yi)) yi->grad_buffer()[0] += gy;
    if (wants_grad(ci)) ci->grad_buffer()[0] += gxx;
  });
  return out;
}

Tensor deform_conv2d(const Tensor& x, const Tensor& offsets, const Tensor& w, const Tensor& bias,
                     Conv2dGeometry g) {
  detail::require_rank(x, 3, "deform_conv2d");
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  require_kernel(w, cin, "deform_conv2d");
  const std::size_t cout = w.dim(0), k = w.dim(2), taps = k * k;
  if (bias.defined() && bias.numel() != cout) throw DimensionError("deform_conv2d: bias extent");
  const std::size_t ho = conv_output_extent(h, k, g), wo = conv_output_extent(wd, k, g);
  const std::size_t npos = ho * wo, kk = cin * taps;
  detail::require_rank(offsets, 3, "deform_conv2d");
  if (offsets.dim(0) != 2 * taps || offsets.dim(1) != ho || offsets.dim(2) != wo) {
    throw DimensionError("deform_conv2d: offsets " + shape_string(offsets.shape()) + ", expected " +
                         shape_string({2 * taps, ho, wo}));
  }
  const long hl = static_cast<long>(h), wl = static_cast<long>(wd);
  const long pad = static_cast<long>(g.padding), stride = static_cast<long>(g.stride);

  auto geom = std::make_shared<std::vector<BilinearTap>>(taps * npos);
  auto ov_off = offsets.values();
  for (std::size_t t = 0; t < taps; ++t) {
    const long i = static_cast<long>(t / k), j = static_cast<long>(t % k);
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        const std::size_t p = oy * wo + ox;
        const double y = static_cast<double>(static_cast<long>(oy) * stride - pad + i) +
                         ov_off[(2 * t) * npos + p];
        const double xx = static_cast<double>(static_cast<long>(ox) * stride - pad + j) +
                          ov_off[(2 * t + 1) * npos + p];
        (*geom)[t * npos + p] = make_tap(y, xx);
      }
    }
  }
  auto cols = std::make_shared<std::vector<double>>(kk * npos);
  auto xv = x.values();
  for (std::size_t c = 0; c < cin; ++c) {
    const double* plane = xv.data() + c * h * wd;
    for (std::size_t t = 0; t < taps; ++t) {
      double* row = cols->data() + (c * taps + t) * npos;
      const BilinearTap* gt = geom->data() + t * npos;
      for (std::size_t p = 0; p < npos; ++p) row[p] = sample(plane, hl, wl, gt[p]);
    }
  }
  Tensor out({cout, ho, wo});
  double* ov = out.mutable_values().data();
  if (bias.defined()) {
    for (std::size_t o = 0; o < cout; ++o) std::fill_n(ov + o * npos, npos, bias[o]);
  }
  detail::gemm_nn(w.values().data(), cols->data(), ov, cout, kk, npos);
  count_macs(static_cast<std::uint64_t>(cout) * kk * npos);

  TensorImpl* xi = x.impl();
  TensorImpl* fi = offsets.impl();
  TensorImpl* wi = w.impl();
  TensorImpl* bi = bias.defined() ? bias.impl() : nullptr;
  TensorImpl* oi = out.impl();
  record_op(out, {x, offsets, w, bias}, [=] {
    const double* gout = oi->grad.data();
    if (wants_grad(wi)) detail::gemm_nt(gout, cols->data(), wi->grad_buffer().data(), cout, npos, kk);
    if (wants_grad(bi)) {
      auto gb = bi->grad_buffer();
      for (std::size_t o = 0; o < cout; ++o) {
        double acc = 0.0;
        for (std::size_t p = 0; p < npos; ++p) acc += gout[o * npos + p];
        gb[o] += acc;
      }
    }
    const bool need_x = wants_grad(xi), need_off = wants_grad(fi);
    if (!need_x && !need_off) return;
    std::vector<double> gcols(kk * npos, 0.0);
    detail::gemm_tn(wi->values.data(), gout, gcols.data(), cout, kk, npos);
    double* gx = need_x ? xi->grad_buffer().data() : nullptr;
    double* goff = need_off ? fi->grad_buffer().data() : nullptr;
    for (std::size_t c = 0; c < cin; ++c) {
      const double* plane = xi->values.data() + c * h * wd;
      double* gplane = gx ? gx + c * h * wd : nullptr;
      for (std::size_t t = 0; t < taps; ++t) {
        const double* grow = gcols.data() + (c * taps + t) * npos;
        const BilinearTap* gt = geom->data() + t * npos;
        for (std::size_t p = 0; p < npos; ++p) {
          if (grow[p] == 0.0) continue;
          auto [dy, dx] = sample_backward(plane, gplane, hl, wl, gt[p], grow[p]);
          if (goff) {
            goff[(2 * t) * npos + p] += grow[p] * dy;
            goff[(2 * t + 1) * npos + p] += grow[p] * dx;
          }
        }
      }
    }
  });
  return out;
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  detail::require_rank(x, 3, "upsample_nearest");
  if (factor == 0) throw ConfigError("upsample factor must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t ho = h * factor, wo = w * factor;
  std::vector<double> v(c * ho * wo);
  auto xv = x.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t xx = 0; xx < wo; ++xx) {
        v[(ch * ho + y) * wo + xx] = xv[(ch * h + y / factor) * w + xx / factor];
      }
    }
  }
  Tensor out({c, ho, wo}, std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [=] {
    auto gx = xi->grad_buffer();
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < ho; ++y) {
        for (std::size_t xx = 0; xx < wo; ++xx) {
          gx[(ch * h + y / factor) * w + xx / factor] += oi->grad[(ch * ho + y) * wo + xx];
        }
      }
    }
  });
  return out;
}

namespace {

struct Interp1d {
  std::vector<std::size_t> lo, hi;
  std::vector<double> frac;
};

Interp1d half_pixel_weights(std::size_t in, std::size_t factor) {
  Interp1d r;
  const std::size_t out = in * factor;
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) / static_cast<double>(factor) - 0.5;
    src = std::max(src, 0.0);
    std::size_t lo = static_cast<std::size_t>(std::floor(src));
    lo = std::min(lo, in - 1);
    const std::size_t hi = std::min(lo + 1, in - 1);
    r.lo.push_back(lo);
    r.hi.push_back(hi);
    r.frac.push_back(src - static_cast<double>(lo));
  }
  return r;
}

}  // namespace

Tensor upsample_bilinear(const Tensor& x, std::size_t factor) {
  detail::require_rank(x, 3, "upsample_bilinear");
  if (factor == 0) throw ConfigError("upsample factor must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t ho = h * factor, wo = w * factor;
  auto iy = std::make_shared<Interp1d>(half_pixel_weights(h, factor));
  auto ix = std::make_shared<Interp1d>(half_pixel_weights(w, factor));
  std::vector<double> v(c * ho * wo);
  auto xv = x.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* p = xv.data() + ch * h * w;
    for (std::size_t y = 0; y < ho; ++y) {
      const double fy = iy->frac[y];
      const double* r0 = p + iy->lo[y] * w;
      const double* r1 = p + iy->hi[y] * w;
      for (std::size_t xx = 0; xx < wo; ++xx) {
        const double fx = ix->frac[xx];
        const std::size_t a = ix->lo[xx], b = ix->hi[xx];
        v[(ch * ho + y) * wo + xx] =
            (1 - fy) * ((1 - fx) * r0[a] + fx * r0[b]) + fy * ((1 - fx) * r1[a] + fx * r1[b]);
      }
    }
  }
  Tensor out({c, ho, wo}, std::move(v));
  TensorImpl* xi = x.impl();
  TensorImpl* oi = out.impl();
  record_op(out, {x}, [=] {
    auto gx = xi->grad_buffer();
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* gp = gx.data() + ch * h * w;
      for (std::size_t y = 0; y < ho; ++y) {
        const double fy = iy->frac[y];
        double* r0 = gp + iy->lo[y] * w;
        double* r1 = gp + iy->hi[y] * w;
        for (std::size_t xx = 0; xx < wo; ++xx) {
          const double g = oi->grad[(ch * ho + y) * wo + xx];
          const double fx = ix->frac[xx];
          const std::size_t a = ix->lo[xx], b = ix->hi[xx];
          r0[a] += g * (1 - fy) * (1 - fx);
          r0[b] += g * (1 - fy) * fx;
          r1[a] += g * fy * (1 - fx);
          r1[b] += g * fy * fx;
        }
      }
    }
  });
  return out;
}

}  // namespace tecnet
