#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "tecnet/parameters.hpp"
#include "tecnet/tensor.hpp"

namespace tecnet {

struct GradCheckReport {
  /// max over checked coordinates of |g_ad - g_fd| / max(1, |g_ad|, |g_fd|)
  double max_rel_error = 0.0;
  /// Name of the tensor holding the worst coordinate ("x" for single-input checks).
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_autodiff = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  bool passed = true;
};

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  /// 0 checks every coordinate; otherwise a seeded random subset per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

/// Compares reverse-mode gradients of a scalar function of `x` with central
/// differences. `x` must be a leaf tensor; its values are restored afterwards.
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double step,
                           double tolerance);

/// Same comparison for a loss closure over a set of parameters.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, const ParameterList& params,
                           const GradCheckOptions& options);

}  // namespace tecnet
