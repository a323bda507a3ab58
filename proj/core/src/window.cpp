#include "tecnet/window.hpp"

#include <algorithm>
#include <string>

#include "tecnet/errors.hpp"
#include "tecnet/ops.hpp"

namespace tecnet {

WindowPlan plan_windows(std::size_t h, std::size_t w, std::size_t window, bool shifted) {
  if (window == 0 || h == 0 || w == 0) throw ConfigError("window planning needs positive extents");
  WindowPlan p;
  if (std::min(h, w) <= window) {
    p.window = std::min(h, w);
    p.shift = 0;
  } else {
    p.window = window;
    p.shift = shifted ? window / 2 : 0;
  }
  p.padded_h = (h + p.window - 1) / p.window * p.window;
  p.padded_w = (w + p.window - 1) / p.window * p.window;
  return p;
}

Tensor window_partition(const Tensor& x, std::size_t m) {
  if (x.ndim() != 3) throw DimensionError("window_partition: expected C x h x w");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (m == 0 || h % m != 0 || w % m != 0) {
    throw DimensionError("window_partition: " + std::to_string(h) + "x" + std::to_string(w) +
                     " grid is not divisible by window " + std::to_string(m) +
                     "; pad the grid first");
  }
  Tensor t = reshape(x, {c, h / m, m, w / m, m});
  t = permute(t, {1, 3, 0, 2, 4});
  return reshape(t, {(h / m) * (w / m), c, m, m});
}

Tensor window_reverse(const Tensor& windows, std::size_t h, std::size_t w) {
  if (windows.ndim() != 4) throw DimensionError("window_reverse: expected nw x C x M x M");
  const std::size_t c = windows.dim(1), m = windows.dim(2);
  if (h % m != 0 || w % m != 0 || windows.dim(0) != (h / m) * (w / m)) {
    throw DimensionError("window_reverse: " + shape_string(windows.shape()) + " does not tile " +
                         std::to_string(h) + "x" + std::to_string(w));
  }
  Tensor t = reshape(windows, {h / m, w / m, c, m, m});
  t = permute(t, {2, 0, 3, 1, 4});
  return reshape(t, {c, h, w});
}

Tensor cyclic_shift(const Tensor& x, std::size_t s) {
  if (s == 0) return x;
  return roll2d(x, -static_cast<long>(s), -static_cast<long>(s));
}

Tensor cyclic_unshift(const Tensor& x, std::size_t s) {
  if (s == 0) return x;
  return roll2d(x, static_cast<long>(s), static_cast<long>(s));
}

std::vector<int> shift_regions(std::size_t h, std::size_t w, std::size_t m, std::size_t s) {
  auto band = [m, s](std::size_t v, std::size_t extent) {
    if (s == 0 || v < extent - m) return 0;
    return v < extent - s ? 1 : 2;
  };
  std::vector<int> ids(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) ids[y * w + x] = band(y, h) * 3 + band(x, w);
  }
  return ids;
}

Tensor shift_mask(std::size_t h, std::size_t w, std::size_t m, std::size_t s) {
  if (h % m != 0 || w % m != 0) {
    throw UsageError("shift_mask: grid is not divisible by the window; pad the grid first");
  }
  const std::size_t nwx = w / m, nw = (h / m) * nwx, n = m * m;
  Tensor mask({nw, n, n});
  if (s == 0) return mask;
  const std::vector<int> ids = shift_regions(h, w, m, s);
  auto out = mask.mutable_values();
  for (std::size_t win = 0; win < nw; ++win) {
    const std::size_t y0 = (win / nwx) * m, x0 = (win % nwx) * m;
    for (std::size_t i = 0; i < n; ++i) {
      const int a = ids[(y0 + i / m) * w + x0 + i % m];
      for (std::size_t j = 0; j < n; ++j) {
        const int b = ids[(y0 + j / m) * w + x0 + j % m];
        out[(win * n + i) * n + j] = a == b ? 0.0 : kMaskedLogit;
      }
    }
  }
  return mask;
}

std::vector<std::size_t> relative_position_index(std::size_t m, std::size_t table) {
  if (m > table) throw ConfigError("relative position table is smaller than the window");
  const std::size_t n = m * m, span = 2 * table - 1;
  std::vector<std::size_t> idx(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t dy = i / m + table - 1 - j / m;
      const std::size_t dx = i % m + table - 1 - j % m;
      idx[i * n + j] = dy * span + dx;
    }
  }
  return idx;
}

}  // namespace tecnet
