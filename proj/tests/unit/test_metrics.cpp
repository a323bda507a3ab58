#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "tecnet/errors.hpp"
#include "tecnet/metrics.hpp"

using namespace tecnet;
using tecnet::testing::count_pixels;
using tecnet::testing::random_mask;

namespace {

BinaryMask rect(std::size_t h, std::size_t w, std::size_t y0, std::size_t y1, std::size_t x0,
                std::size_t x1) {
  BinaryMask m(h, w);
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) m.set(y, x, true);
  return m;
}

struct PooledStats {
  double asd, rmsd, hd95, max;
};

// Statistics of the oracle pool, written out independently of the library.
PooledStats pooled_stats(std::vector<double> pool) {
  PooledStats s{};
  double sum = 0, sq = 0;
  for (double d : pool) {
    sum += d;
    sq += d * d;
  }
  s.asd = sum / pool.size();
  s.rmsd = std::sqrt(sq / pool.size());
  std::sort(pool.begin(), pool.end());
  s.max = pool.back();
  const double pos = 0.95 * (pool.size() - 1);
  const std::size_t k = static_cast<std::size_t>(pos);
  s.hd95 = k + 1 < pool.size() ? pool[k] + (pos - k) * (pool[k + 1] - pool[k]) : pool[k];
  return s;
}

void check_against_counts(const BinaryMask& p, const BinaryMask& g) {
  const auto c = count_pixels(p, g);
  const ConfusionMetrics m = confusion_metrics(p, g);
  const double tp = c.tp, fp = c.fp, fn = c.fn, tn = c.tn;
  if (tp + fp + fn > 0) {
    CHECK(m.dice == 200.0 * tp / (2 * tp + fp + fn));
    CHECK(m.jaccard == 100.0 * tp / (tp + fp + fn));
  }
  if (tp + fn > 0) CHECK(m.sensitivity == 100.0 * tp / (tp + fn));
  if (tn + fp > 0) CHECK(m.specificity == 100.0 * tn / (tn + fp));
  CHECK(m.accuracy == 100.0 * (tp + tn) / (tp + tn + fp + fn));
  if (tp + fn > 0) {
    const VolumeMetrics v = volume_metrics(p, g);
    if (tp + fp + fn > 0) CHECK(v.voe == 100.0 * (1.0 - tp / (tp + fp + fn)));
    CHECK(v.rvd == 100.0 * ((tp + fp) - (tp + fn)) / (tp + fn));
  }
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("confusion examples") {
  const BinaryMask a = rect(8, 8, 2, 6, 1, 5);
  const ConfusionMetrics same = confusion_metrics(a, a);
  CHECK(same.dice == 100.0);
  CHECK(same.jaccard == 100.0);
  CHECK(same.sensitivity == 100.0);
  CHECK(same.specificity == 100.0);
  CHECK(same.accuracy == 100.0);

  const ConfusionMetrics apart = confusion_metrics(rect(8, 8, 0, 2, 0, 2), rect(8, 8, 5, 8, 5, 8));
  CHECK(apart.dice == 0.0);
  CHECK(apart.jaccard == 0.0);
  CHECK(apart.sensitivity == 0.0);

  const std::size_t n = 10;
  const BinaryMask left = rect(n, n, 0, n, 0, n / 2), top = rect(n, n, 0, n / 2, 0, n);
  CHECK(count_pixels(top, left).tp == n * n / 4);
  CHECK(confusion_metrics(top, left).dice == 50.0);

  const BinaryMask empty(6, 6);
  const ConfusionMetrics none = confusion_metrics(empty, empty);
  CHECK(none.dice == 100.0);
  CHECK(none.jaccard == 100.0);
  CHECK(none.sensitivity == 100.0);
  CHECK_THROWS_AS(confusion_metrics(BinaryMask(4, 4), BinaryMask(4, 5)), DimensionError);
}

TEST_CASE("volume examples") {
  const BinaryMask g = rect(20, 20, 0, 10, 0, 10);
  CHECK(g.count() == 100);
  CHECK(volume_metrics(g, g).voe == 0.0);
  CHECK(volume_metrics(g, g).rvd == 0.0);
  BinaryMask p = g;
  p.set(15, 15, true);
  CHECK(volume_metrics(p, g).rvd == 1.0);
  CHECK_THROWS_AS(volume_metrics(p, BinaryMask(20, 20)), UndefinedMetricError);

  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    const BinaryMask a = random_mask(12, 9, 0.4, rng), b = random_mask(12, 9, 0.4, rng);
    if (b.count() == 0) continue;
    CHECK(std::abs(volume_metrics(a, b).voe - (100.0 - confusion_metrics(a, b).jaccard)) < 1e-12);
  }
}

TEST_CASE("surface examples") {
  const BinaryMask a = rect(16, 16, 3, 11, 4, 9);
  const SurfaceMetrics same = surface_metrics(a, a);
  CHECK(same.asd == 0.0);
  CHECK(same.rmsd == 0.0);
  CHECK(same.hd95 == 0.0);

  BinaryMask p(5, 8), g(5, 8);
  p.set(2, 1, true);
  g.set(2, 4, true);
  const SurfaceMetrics d = surface_metrics(p, g);
  CHECK(d.asd == 3.0);
  CHECK(d.rmsd == 3.0);
  CHECK(d.hd95 == 3.0);
  CHECK_THROWS_AS(surface_metrics(p, BinaryMask(5, 8)), UndefinedMetricError);
}

TEST_CASE("surface extraction marks edge pixels and holes") {
  BinaryMask m = rect(7, 7, 0, 5, 0, 5);
  m.set(2, 2, false);
  const BinaryMask s = surface_of(m);
  CHECK(s.at(0, 0));
  CHECK(s.at(4, 4));
  CHECK(s.at(1, 2));
  CHECK(s.at(2, 1));
  CHECK_FALSE(s.at(1, 1));
  CHECK_FALSE(s.at(3, 3));
  CHECK_FALSE(s.at(2, 2));
}

TEST_CASE("fifty random pairs agree with the oracles exactly") {
  Rng rng(50);
  std::uniform_int_distribution<std::size_t> dim(1, 32);
  std::uniform_real_distribution<double> dens(0.05, 0.7);
  int surface_pairs = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t h = dim(rng), w = dim(rng);
    const BinaryMask p = random_mask(h, w, dens(rng), rng), g = random_mask(h, w, dens(rng), rng);
    check_against_counts(p, g);
    if (p.count() == 0 || g.count() == 0) continue;
    ++surface_pairs;
    const std::vector<double> pool = testing::brute_force_surface_pool(p, g);
    std::vector<double> lib = directed_surface_distances(p, g);
    const std::vector<double> back = directed_surface_distances(g, p);
    lib.insert(lib.end(), back.begin(), back.end());
    CHECK(lib == pool);
    const PooledStats o = pooled_stats(pool);
    const SurfaceMetrics m = surface_metrics(p, g);
    CHECK(m.asd == o.asd);
    CHECK(m.rmsd == o.rmsd);
    CHECK(m.hd95 == o.hd95);
    CHECK(m.max == o.max);
    CHECK(m.rmsd >= m.asd);
    CHECK(m.hd95 <= m.max);
  }
  CHECK(surface_pairs >= 45);
}

TEST_CASE("distance transform matches brute force") {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const BinaryMask m = random_mask(11, 17, 0.08, rng);
    const std::vector<double> dt = squared_distance_transform(m);
    for (std::size_t y = 0; y < m.height; ++y)
      for (std::size_t x = 0; x < m.width; ++x) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < m.height; ++v)
          for (std::size_t u = 0; u < m.width; ++u)
            if (m.at(v, u)) {
              const double dy = double(y) - double(v), dx = double(x) - double(u);
              best = std::min(best, dy * dy + dx * dx);
            }
        CHECK(dt[y * m.width + x] == best);
      }
  }
}

TEST_CASE("symmetry and operand exchange") {
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const BinaryMask a = random_mask(14, 10, 0.3, rng), b = random_mask(14, 10, 0.3, rng);
    if (a.count() == 0 || b.count() == 0) continue;
    const SurfaceMetrics ab = surface_metrics(a, b), ba = surface_metrics(b, a);
    CHECK(std::abs(ab.asd - ba.asd) < 1e-12);
    CHECK(std::abs(ab.rmsd - ba.rmsd) < 1e-12);
    CHECK(ab.hd95 == ba.hd95);
    const ConfusionMetrics cab = confusion_metrics(a, b), cba = confusion_metrics(b, a);
    CHECK(cab.dice == cba.dice);
    CHECK(cab.jaccard == cba.jaccard);
    // Exchanging operands turns FN into FP: SE(b, a) is the precision of a against b.
    const auto c = count_pixels(a, b);
    CHECK(cba.sensitivity == 100.0 * double(c.tp) / double(c.tp + c.fp));
  }
}

TEST_CASE("adding true positives never lowers dice") {
  Rng rng(10);
  const BinaryMask g = random_mask(16, 16, 0.5, rng);
  BinaryMask p = random_mask(16, 16, 0.1, rng);
  double last = confusion_metrics(p, g).dice;
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    if (!g.cells[i] || p.cells[i]) continue;
    p.cells[i] = 1;
    const double now = confusion_metrics(p, g).dice;
    CHECK(now >= last);
    last = now;
  }
  CHECK(last > 0.0);
}

TEST_CASE("csv marks undefined values") {
  BinaryMask p(4, 4), g(4, 4);
  p.set(1, 1, true);
  std::ostringstream os;
  write_metrics_csv(os, {evaluate_pair("s0", p, g), evaluate_pair("s1", p, p)});
  const std::string csv = os.str();
  CHECK(csv.rfind("sample_id,DI,JA,SE,SP,AC,VOE,RVD,ASD,RMSD,HD95\n", 0) == 0);
  CHECK(csv.find("s0,0.000000,0.000000,100.000000,93.750000,93.750000,nan,nan,nan,nan,nan\n") !=
        std::string::npos);
  CHECK(csv.find("s1,100.000000,100.000000,100.000000,100.000000,100.000000,0.000000,0.000000,"
                 "0.000000,0.000000,0.000000\n") != std::string::npos);
}

}  // TEST_SUITE
