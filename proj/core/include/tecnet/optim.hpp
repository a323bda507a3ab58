#pragma once

#include <cstddef>
#include <vector>

#include "tecnet/parameters.hpp"

namespace tecnet {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter list.
class Adam {
 public:
  Adam(ParameterList params, AdamOptions options = {});

  /// Applies one update from the accumulated gradients, then clears them.
  void step(double lr);
  void zero_grad();
  std::size_t steps() const { return t_; }

 private:
  ParameterList params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

/// Halves (by `factor`) the learning rate once the monitored loss has not
/// improved for `patience` consecutive epochs.
class PlateauSchedule {
 public:
  PlateauSchedule(double initial_lr, std::size_t patience = 10, double factor = 0.5);

  /// Reports an epoch's loss; returns true when the rate was just reduced.
  bool observe(double loss);
  double lr() const { return lr_; }
  double best() const { return best_; }

 private:
  double lr_;
  std::size_t patience_;
  double factor_;
  double best_;
  std::size_t bad_epochs_ = 0;
};

}  // namespace tecnet
