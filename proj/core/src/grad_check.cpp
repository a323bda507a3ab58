#include "tecnet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tecnet/errors.hpp"

namespace tecnet {

namespace {

double rel_error(double ad, double fd) {
  return std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
}

void note(GradCheckReport& r, const std::string& name, std::size_t i, double ad, double fd) {
  const double e = rel_error(ad, fd);
  if (r.checked++ == 0 || e > r.max_rel_error) {
    r.max_rel_error = e;
    r.worst_tensor = name;
    r.worst_index = i;
    r.worst_autodiff = ad;
    r.worst_numeric = fd;
  }
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double step,
                           double tolerance) {
  if (x.tape_id() >= 0) throw UsageError("grad_check: x must be a leaf tensor");
  const bool had = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = f(x);
    tape.backward(loss);
  }
  std::vector<double> ad(x.grad().begin(), x.grad().end());
  GradCheckReport report;
  auto v = x.mutable_values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double saved = v[i];
    NoGradScope no_grad;
    v[i] = saved + step;
    const double up = f(x).item();
    v[i] = saved - step;
    const double down = f(x).item();
    v[i] = saved;
    note(report, "x", i, ad[i], (up - down) / (2.0 * step));
  }
  x.zero_grad();
  x.set_requires_grad(had);
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, const ParameterList& params,
                           const GradCheckOptions& options) {
  for (NamedTensor p : params) p.tensor.zero_grad();
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = loss_fn();
    tape.backward(loss);
  }
  GradCheckReport report;
  Rng rng(options.seed);
  for (const auto& p : params) {
    Tensor t = p.tensor;
    std::vector<double> ad(t.grad().begin(), t.grad().end());
    std::vector<std::size_t> coords(t.numel());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_tensor > 0 && coords.size() > options.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    auto v = t.mutable_values();
    NoGradScope no_grad;
    for (std::size_t i : coords) {
      const double saved = v[i];
      v[i] = saved + options.step;
      const double up = loss_fn().item();
      v[i] = saved - options.step;
      const double down = loss_fn().item();
      v[i] = saved;
      note(report, p.name, i, ad[i], (up - down) / (2.0 * options.step));
    }
    t.zero_grad();
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace tecnet
