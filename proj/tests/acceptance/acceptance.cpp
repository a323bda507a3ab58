// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: tecnet_acceptance [criterion numbers...]   (default: all ten)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "check_util.hpp"
#include "oracles.hpp"
#include "tecnet/analyzer.hpp"
#include "tecnet/attention.hpp"
#include "tecnet/cost_model.hpp"
#include "tecnet/dataset.hpp"
#include "tecnet/ddconv.hpp"
#include "tecnet/loss.hpp"
#include "tecnet/metrics.hpp"
#include "tecnet/model.hpp"
#include "tecnet/ops.hpp"
#include "tecnet/synth.hpp"
#include "tecnet/trainer.hpp"
#include "tecnet/window.hpp"

using namespace tecnet;
using tecnet::testing::random_tensor;

namespace {

// Pinned tolerances.
constexpr double kPrimitiveTol = 1e-4;
constexpr double kModelTol = 1e-3;
constexpr double kDegeneracyTol = 1e-9;
constexpr double kMaskedMassTol = 1e-8;
constexpr double kLambdaTol = 1e-12;
constexpr double kOverfitDice = 0.95;
constexpr double kHeldOutDice = 80.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<SegSample> synth_samples(std::uint64_t seed, std::size_t count, double gap,
                                     double noise) {
  SynthSpec spec;
  spec.seed = seed;
  spec.count = count;
  spec.size = 64;
  spec.gap = gap;
  spec.noise = noise;
  std::vector<SegSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const SynthSample s = generate_sample(spec, i);
    char id[16];
    std::snprintf(id, sizeof id, "%04zu", i);
    out.push_back(sample_from_images(id, s.image, s.mask));
  }
  return out;
}

Outcome gradient_fidelity() {
  double prim = 0, mod = 0;
  std::string worst;
  std::size_t checks = 0;
  for (const auto& c : testing::primitive_gradient_checks()) {
    if (c.report.max_rel_error >= prim) worst = c.name;
    prim = std::max(prim, c.report.max_rel_error);
    ++checks;
  }
  for (const auto& c : testing::module_gradient_checks()) {
    if (c.report.max_rel_error >= mod) worst = c.name;
    mod = std::max(mod, c.report.max_rel_error);
    ++checks;
  }
  const auto nano = testing::nano_model_gradient_check(2);
  const double full = nano.report.max_rel_error;
  const bool ok = prim < kPrimitiveTol && mod < kPrimitiveTol && full < kModelTol;
  return {ok, std::to_string(checks) + " primitive/module checks, max rel err " +
                  fmt("%.2e", std::max(prim, mod)) + " (" + worst + "); Nano composite " +
                  fmt("%.2e", full) + " over " + std::to_string(nano.report.checked) + " coords"};
}

Outcome ddconv_degeneracy() {
  Rng rng(2024);
  const TecNetConfig cfg = TecNetConfig::nano();
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    // Cycle through the CNN stage shapes of the Nano encoder.
    const std::size_t level = t % 4;
    const std::size_t c = cfg.base_width << level;
    const std::size_t grid = cfg.input_size / cfg.patch >> level;
    DDConvOptions o;
    o.in_channels = o.out_channels = c;
    o.n_kernels = 1;
    DDConvLayer layer(o, rng);
    testing::perturb({{"bias", layer.bias()}}, rng, 1.0);
    const Tensor x = random_tensor({c, grid, grid}, rng);
    const Tensor w = reshape(layer.kernels(), {c, c, 3, 3});
    const Tensor y = layer.forward(x), want = conv2d(x, w, layer.bias(), {1, 1});
    for (std::size_t i = 0; i < y.numel(); ++i) worst = std::max(worst, std::abs(y[i] - want[i]));
  }
  return {worst < kDegeneracyTol, "100 inputs, max abs diff " + fmt("%.2e", worst)};
}

Outcome window_machinery() {
  Rng rng(3);
  std::size_t shapes = 0;
  bool exact = true;
  for (std::size_t h : {8, 16, 28}) {
    for (std::size_t w : {8, 16, 28}) {
      for (std::size_t m : {4, 7}) {
        const WindowPlan plan = plan_windows(h, w, m, true);
        const Tensor x = random_tensor({3, h, w}, rng);
        const Tensor padded = pad2d(x, 0, plan.padded_h - h, 0, plan.padded_w - w);
        const Tensor part = window_partition(padded, plan.window);
        const Tensor shifted = cyclic_shift(padded, plan.shift);
        const Tensor a = window_reverse(part, plan.padded_h, plan.padded_w);
        const Tensor b = cyclic_unshift(shifted, plan.shift);
        for (std::size_t i = 0; i < padded.numel(); ++i) {
          exact = exact && a[i] == padded[i] && b[i] == padded[i];
        }
        ++shapes;
      }
    }
  }
  double worst = 0;
  for (std::size_t grid : {8, 16, 28}) {
    for (std::size_t m : {4, 7}) {
      AcamOptions o;
      o.channels = 16;
      o.heads = 2;
      o.window = m;
      o.grid_h = o.grid_w = grid;
      o.shifted = true;
      AcamLayer layer(o, rng);
      testing::perturb(layer.parameters(), rng, 1.0);
      AcamTrace trace;
      (void)layer.forward(random_tensor({16, grid, grid}, rng, -3, 3), &trace);
      const WindowPlan& p = layer.plan();
      const Tensor mask = shift_mask(p.padded_h, p.padded_w, p.window, p.shift);
      const std::size_t n = p.window * p.window;
      for (std::size_t win = 0; win < p.windows(); ++win)
        for (std::size_t h = 0; h < o.heads; ++h)
          for (std::size_t ij = 0; ij < n * n; ++ij)
            if (mask[win * n * n + ij] != 0.0)
              worst = std::max(worst, trace.spatial_probs[(win * o.heads + h) * n * n + ij]);
    }
  }
  return {exact && worst < kMaskedMassTol,
          std::to_string(shapes) + " shapes " + (exact ? "exact" : "NOT exact") +
              "; max masked attention mass " + fmt("%.2e", worst)};
}

Outcome complexity_model() {
  bool ok = cost_msa({8, 8, 16, 4}) == 196608 && cost_swmsa({8, 8, 16, 4}) == 98304 &&
            cost_acam({8, 8, 16, 4}) == 20480;
  std::size_t points = 0;
  for (std::uint64_t h : {8, 16, 56}) {
    for (std::uint64_t w : {8, 16, 56}) {
      for (std::uint64_t c : {16, 96}) {
        for (std::uint64_t m : {4, 7}) {
          const CostModel g{h, w, c, m};
          const std::uint64_t n = h * w;
          ok = ok && cost_msa(g) == 4 * n * c * c + 2 * n * n * c;
          ok = ok && cost_swmsa(g) == 4 * n * c * c + 2 * m * m * n * c;
          ok = ok && cost_acam(g) == n * c * c / 4 + m * m * n * c;
          ok = ok && cost_acam(g) < cost_swmsa(g);
          if (n > m * m) ok = ok && cost_swmsa(g) < cost_msa(g);
          ++points;
        }
      }
    }
  }
  return {ok, std::to_string(points) + " grid points; (8,8,16,4) -> (" +
                  std::to_string(cost_msa({8, 8, 16, 4})) + ", " +
                  std::to_string(cost_swmsa({8, 8, 16, 4})) + ", " +
                  std::to_string(cost_acam({8, 8, 16, 4})) + ")"};
}

Outcome loss_algebra() {
  bool ok = true;
  Rng rng(5);
  Tensor label({1, 8, 8});
  for (std::size_t i = 0; i < 32; ++i) label.mutable_values()[i] = 1.0;
  const Tensor a = random_tensor({1, 8, 8}, rng, -2, 2), b = random_tensor({1, 8, 8}, rng, -2, 2),
               c = random_tensor({1, 8, 8}, rng, -2, 2);
  double worst = 0;
  for (double k : {0.0, 0.25, 0.5, 1.0}) {
    const double lambda = ramp_lambda(k, 1.0);
    // With every branch loss equal to one value v the total must be v.
    const LossTerms same = total_loss(a, a, a, label, lambda);
    worst = std::max(worst, std::abs(same.total.item() - same.tec.item()));
    const LossTerms t = total_loss(a, b, c, label, lambda);
    worst = std::max(worst, std::abs(t.total.item() - (lambda * t.tec.item() +
                                                       (1 - lambda) / 2 * t.cnn.item() +
                                                       (1 - lambda) / 2 * t.trans.item())));
  }
  ok = ok && worst < 1e-14;
  const double e5 = std::abs(ramp_lambda(0.0, 1.0) - std::exp(-5.0));
  ok = ok && e5 < kLambdaTol;
  bool monotone = true;
  for (int i = 1; i < 100; ++i) monotone = monotone && ramp_lambda(i / 99.0, 1.0) > ramp_lambda((i - 1) / 99.0, 1.0);
  ok = ok && monotone;
  return {ok, "coefficient residual " + fmt("%.1e", worst) + ", |lambda(0) - e^-5| " +
                  fmt("%.1e", e5) + (monotone ? ", monotone" : ", NOT monotone")};
}

Outcome overfit() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<SegSample> data = synth_samples(7, 8, 0.6, 0.05);
  TrainOptions o;
  o.steps = 300;
  o.batch_size = 8;
  o.lr = 1e-3;
  o.seed = 7;
  const TecNet model(TecNetConfig::nano(), 7);
  const TrainResult r = train(model, {data, {}}, o);
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 20; ++i) first += r.history[i].total / 20;
  for (std::size_t i = 280; i < 300; ++i) last += r.history[i].total / 20;
  double dice = 0;
  {
    NoGradScope no_grad;
    for (const SegSample& s : data) dice += soft_dice(model.forward(s.image).y_tec, s.mask) / 8;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {dice > kOverfitDice && last < first,
          "soft Dice " + fmt("%.4f", dice) + ", loss steps 1-20 " + fmt("%.4f", first) +
              " -> 281-300 " + fmt("%.4f", last) + ", " + fmt("%.0f s", secs)};
}

Outcome generalization() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<SegSample> all = synth_samples(11, 232, 0.6, 0.05);
  DatasetSplit split;
  split.train.assign(all.begin(), all.begin() + 200);
  split.validation.assign(all.begin() + 200, all.end());
  TrainOptions o;
  o.batch_size = 8;
  o.steps = 5 * 200 / 8;
  o.lr = 1e-3;
  o.seed = 11;
  const TecNet model(TecNetConfig::nano(), 11);
  const TrainResult r = train(model, split, o);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {r.epochs == 5 && r.validation_dice > kHeldOutDice,
          "held-out DI " + fmt("%.2f", r.validation_dice) + " on 32 samples after " +
              std::to_string(r.epochs) + " epochs, " + fmt("%.0f s", secs)};
}

Outcome metrics_oracle() {
  Rng rng(50);
  std::uniform_int_distribution<std::size_t> dim(1, 32);
  std::uniform_real_distribution<double> dens(0.05, 0.7);
  bool ok = true;
  std::size_t surface_pairs = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t h = dim(rng), w = dim(rng);
    const BinaryMask p = testing::random_mask(h, w, dens(rng), rng);
    const BinaryMask g = testing::random_mask(h, w, dens(rng), rng);
    const auto n = testing::count_pixels(p, g);
    const double tp = n.tp, fp = n.fp, fn = n.fn, tn = n.tn;
    const ConfusionMetrics c = confusion_metrics(p, g);
    if (tp + fp + fn > 0) {
      ok = ok && c.dice == 200.0 * tp / (2 * tp + fp + fn) && c.jaccard == 100.0 * tp / (tp + fp + fn);
    }
    if (tp + fn > 0) {
      ok = ok && c.sensitivity == 100.0 * tp / (tp + fn);
      const VolumeMetrics v = volume_metrics(p, g);
      ok = ok && v.rvd == 100.0 * ((tp + fp) - (tp + fn)) / (tp + fn) &&
           v.voe == 100.0 * (1.0 - tp / (tp + fp + fn));
    }
    if (tn + fp > 0) ok = ok && c.specificity == 100.0 * tn / (tn + fp);
    ok = ok && c.accuracy == 100.0 * (tp + tn) / (tp + tn + fp + fn);
    if (p.count() == 0 || g.count() == 0) continue;
    ++surface_pairs;
    std::vector<double> pool = testing::brute_force_surface_pool(p, g);
    double sum = 0, sq = 0;
    for (double d : pool) {
      sum += d;
      sq += d * d;
    }
    std::sort(pool.begin(), pool.end());
    const double pos = 0.95 * (pool.size() - 1);
    const std::size_t k = static_cast<std::size_t>(pos);
    const double hd95 = k + 1 < pool.size() ? pool[k] + (pos - k) * (pool[k + 1] - pool[k]) : pool[k];
    const SurfaceMetrics s = surface_metrics(p, g);
    ok = ok && s.asd == sum / pool.size() && s.rmsd == std::sqrt(sq / pool.size()) &&
         s.hd95 == hd95 && s.max == pool.back();
    ok = ok && s.rmsd >= s.asd && s.hd95 <= s.max;
  }
  return {ok, "50 pairs, " + std::to_string(surface_pairs) + " with both surfaces nonempty"};
}

Outcome parameter_accounting() {
  bool ok = true;
  std::string detail;
  for (const TecNetConfig& cfg : {TecNetConfig::nano(), TecNetConfig::tiny(), TecNetConfig::base()}) {
    const ModuleCounts closed = count_params(cfg);
    ModuleCounts enumerated;
    {
      const TecNet model(cfg, 1);
      enumerated = enumerate_params(model.parameters());
    }
    const bool same = closed == enumerated;
    ok = ok && same;
    detail += cfg.variant + " " + std::to_string(total_of(closed)) + (same ? " exact; " : " MISMATCH; ");
  }
  const TecNetConfig t = TecNetConfig::tiny();
  const double params = static_cast<double>(total_of(count_params(t)));
  const double macs = static_cast<double>(total_of(count_flops(t)));
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "T at %zux%zu: %.2f M params, %.2f GMACs (reference 11.58 M, 4.53 GFLOPs; informational)",
                t.input_size, t.input_size, params / 1e6, macs / 1e9);
  return {ok, detail + buf};
}

Outcome ablation_toggles() {
  const std::vector<SegSample> data = synth_samples(3, 2, 0.6, 0.05);
  const TecNetConfig nano = TecNetConfig::nano();
  const std::vector<AblationRow> rows = ablation_table(nano);
  std::uint64_t baseline = 0;
  for (const AblationRow& r : rows)
    if (!r.use_ddconv && !r.use_acam && !r.use_lpm) baseline = r.params;
  bool ok = rows.size() == 8;
  std::string detail;
  for (const AblationRow& r : rows) {
    TecNetConfig cfg = nano;
    cfg.use_ddconv = r.use_ddconv;
    cfg.use_acam = r.use_acam;
    cfg.use_lpm = r.use_lpm;
    const TecNet model(cfg, 1);
    const std::uint64_t actual = count_elements(model.parameters());
    TrainOptions o;
    o.steps = 1;
    o.batch_size = 2;
    bool ran = true;
    try {
      const TrainResult tr = train(model, {data, {}}, o);
      ran = tr.history.size() == 1 && std::isfinite(tr.history[0].total);
    } catch (const std::exception&) {
      ran = false;
    }
    const bool predicted = static_cast<std::int64_t>(baseline) + r.predicted_delta ==
                           static_cast<std::int64_t>(actual);
    ok = ok && ran && predicted && actual == r.params;
    detail += std::string(r.use_ddconv ? "D" : "-") + (r.use_acam ? "A" : "-") +
              (r.use_lpm ? "L" : "-") + " " + (r.predicted_delta >= 0 ? "+" : "") +
              std::to_string(r.predicted_delta) + (ran && predicted ? "" : "!") + " ";
  }
  detail += "(params vs all-off " + std::to_string(baseline) + ")";
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"ddconv degeneracy", ddconv_degeneracy},
      {"window machinery", window_machinery},
      {"complexity model", complexity_model},
      {"loss algebra", loss_algebra},
      {"overfit", overfit},
      {"generalization", generalization},
      {"metrics oracle", metrics_oracle},
      {"parameter accounting", parameter_accounting},
      {"ablation toggles", ablation_toggles},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %-22s %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
