#include "tecnet/optim.hpp"

#include <cmath>
#include <limits>

#include "tecnet/errors.hpp"

namespace tecnet {

Adam::Adam(ParameterList params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const NamedTensor& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor t = params_[i].tensor;
    if (!t.has_grad()) continue;
    auto g = t.grad();
    auto x = t.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      x[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + options_.eps);
    }
  }
  zero_grad();
}

void Adam::zero_grad() {
  for (NamedTensor p : params_) p.tensor.zero_grad();
}

PlateauSchedule::PlateauSchedule(double initial_lr, std::size_t patience, double factor)
    : lr_(initial_lr),
      patience_(patience),
      factor_(factor),
      best_(std::numeric_limits<double>::infinity()) {
  if (initial_lr <= 0.0 || factor <= 0.0 || factor >= 1.0 || patience == 0) {
    throw ConfigError("plateau schedule needs lr > 0, 0 < factor < 1 and patience >= 1");
  }
}

bool PlateauSchedule::observe(double loss) {
  if (loss < best_) {
    best_ = loss;
    bad_epochs_ = 0;
    return false;
  }
  if (++bad_epochs_ < patience_) return false;
  lr_ *= factor_;
  bad_epochs_ = 0;
  return true;
}

}  // namespace tecnet
