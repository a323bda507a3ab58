#include "tecnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "tecnet/errors.hpp"

namespace tecnet {

namespace {

void require_same(const BinaryMask& a, const BinaryMask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError("mask extents differ: " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                         std::to_string(b.width));
  }
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Counts count(const BinaryMask& pred, const BinaryMask& gt) {
  require_same(pred, gt);
  Counts c;
  for (std::size_t i = 0; i < pred.cells.size(); ++i) {
    const bool p = pred.cells[i] != 0, g = gt.cells[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double percent(std::size_t num, std::size_t den, double if_empty) {
  return den == 0 ? if_empty : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

// 1D squared distance transform of f (lower envelope of parabolas).
void edt_1d(const double* f, std::size_t n, std::size_t stride, double* out,
            std::vector<std::size_t>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q * stride] < inf) {
      first = q;
      break;
    }
  }
  if (first == n) {
    for (std::size_t q = 0; q < n; ++q) out[q * stride] = inf;
    return;
  }
  v[0] = first;
  z[0] = -inf;
  z[1] = inf;
  for (std::size_t q = first + 1; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == inf) continue;
    const double qd = static_cast<double>(q);
    double s;
    while (true) {
      const double vk = static_cast<double>(v[k]);
      s = ((fq + qd * qd) - (f[v[k] * stride] + vk * vk)) / (2.0 * qd - 2.0 * vk);
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double qd = static_cast<double>(q);
    while (z[k + 1] < qd) ++k;
    const double d = qd - static_cast<double>(v[k]);
    out[q * stride] = d * d + f[v[k] * stride];
  }
}

}  // namespace

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

ConfusionMetrics confusion_metrics(const BinaryMask& pred, const BinaryMask& gt) {
  const Counts c = count(pred, gt);
  ConfusionMetrics m;
  m.dice = percent(2 * c.tp, 2 * c.tp + c.fp + c.fn, 100.0);
  m.jaccard = percent(c.tp, c.tp + c.fp + c.fn, 100.0);
  m.sensitivity = percent(c.tp, c.tp + c.fn, 100.0);
  m.specificity = percent(c.tn, c.tn + c.fp, 100.0);
  m.accuracy = percent(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn, 100.0);
  return m;
}

VolumeMetrics volume_metrics(const BinaryMask& pred, const BinaryMask& gt) {
  const Counts c = count(pred, gt);
  const std::size_t g = c.tp + c.fn, p = c.tp + c.fp;
  if (g == 0) throw UndefinedMetricError("relative volume difference needs a nonempty ground truth");
  VolumeMetrics m;
  m.voe = 100.0 * (1.0 - static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp + c.fn));
  m.rvd = 100.0 * (static_cast<double>(p) - static_cast<double>(g)) / static_cast<double>(g);
  return m;
}

BinaryMask surface_of(const BinaryMask& m) {
  BinaryMask s(m.height, m.width);
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) {
      if (!m.at(y, x)) continue;
      const bool edge = y == 0 || x == 0 || y + 1 == m.height || x + 1 == m.width;
      const bool border = edge || !m.at(y - 1, x) || !m.at(y + 1, x) || !m.at(y, x - 1) ||
                          !m.at(y, x + 1);
      s.set(y, x, border);
    }
  }
  return s;
}

std::vector<double> squared_distance_transform(const BinaryMask& m) {
  const std::size_t h = m.height, w = m.width;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(h * w), g(h * w);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = m.cells[i] ? 0.0 : inf;
  const std::size_t n = std::max(h, w);
  std::vector<std::size_t> v(n);
  std::vector<double> z(n + 1);
  for (std::size_t x = 0; x < w; ++x) edt_1d(f.data() + x, h, w, g.data() + x, v, z);
  for (std::size_t y = 0; y < h; ++y) edt_1d(g.data() + y * w, w, 1, f.data() + y * w, v, z);
  return f;
}

std::vector<double> directed_surface_distances(const BinaryMask& from, const BinaryMask& to) {
  require_same(from, to);
  const BinaryMask sf = surface_of(from), st = surface_of(to);
  const std::vector<double> dt = squared_distance_transform(st);
  std::vector<double> d;
  for (std::size_t i = 0; i < sf.cells.size(); ++i) {
    if (sf.cells[i]) d.push_back(std::sqrt(dt[i]));
  }
  return d;
}

SurfaceMetrics surface_metrics(const BinaryMask& pred, const BinaryMask& gt) {
  require_same(pred, gt);
  if (pred.count() == 0 || gt.count() == 0) {
    throw UndefinedMetricError("surface distances need nonempty prediction and ground truth");
  }
  std::vector<double> pool = directed_surface_distances(pred, gt);
  const std::vector<double> back = directed_surface_distances(gt, pred);
  pool.insert(pool.end(), back.begin(), back.end());
  SurfaceMetrics m;
  double s = 0.0, s2 = 0.0;
  for (double d : pool) {
    s += d;
    s2 += d * d;
  }
  const double n = static_cast<double>(pool.size());
  m.asd = s / n;
  m.rmsd = std::sqrt(s2 / n);
  std::sort(pool.begin(), pool.end());
  m.max = pool.back();
  const double rank = 0.95 * (n - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, pool.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  m.hd95 = pool[lo] + frac * (pool[hi] - pool[lo]);
  return m;
}

SampleMetrics evaluate_pair(const std::string& id, const BinaryMask& pred, const BinaryMask& gt) {
  SampleMetrics r;
  r.id = id;
  r.confusion = confusion_metrics(pred, gt);
  try {
    r.volume = volume_metrics(pred, gt);
  } catch (const UndefinedMetricError&) {
    r.volume_defined = false;
  }
  try {
    r.surface = surface_metrics(pred, gt);
  } catch (const UndefinedMetricError&) {
    r.surface_defined = false;
  }
  return r;
}

void write_metrics_csv(std::ostream& os, const std::vector<SampleMetrics>& rows) {
  os << "sample_id,DI,JA,SE,SP,AC,VOE,RVD,ASD,RMSD,HD95\n";
  char buf[64];
  auto num = [&buf](double v, bool defined) -> const char* {
    if (!defined) return "nan";
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  };
  for (const SampleMetrics& r : rows) {
    const ConfusionMetrics& c = r.confusion;
    os << r.id;
    for (double v : {c.dice, c.jaccard, c.sensitivity, c.specificity, c.accuracy}) {
      os << ',' << num(v, true);
    }
    os << ',' << num(r.volume.voe, r.volume_defined) << ',' << num(r.volume.rvd, r.volume_defined);
    for (double v : {r.surface.asd, r.surface.rmsd, r.surface.hd95}) {
      os << ',' << num(v, r.surface_defined);
    }
    os << '\n';
  }
}

}  // namespace tecnet
