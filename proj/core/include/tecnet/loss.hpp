#pragma once

#include "tecnet/tensor.hpp"

namespace tecnet {

/// Gaussian ramp-up weight delta * exp(-5 (1 - k)^2) with k clamped to [0, 1].
double ramp_lambda(double k, double delta = 1.0);

/// Soft Dice loss 1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps) of
/// probabilities p against a binary label, averaged over channels.
Tensor soft_dice_loss(const Tensor& probs, const Tensor& label, double eps = 1.0);

/// MSE(sigmoid(logits), label) + soft Dice loss of sigmoid(logits).
Tensor branch_loss(const Tensor& logits, const Tensor& label);

struct LossTerms {
  Tensor total;
  Tensor tec;
  Tensor cnn;
  Tensor trans;
};

/// lambda * L_tec + (1 - lambda)/2 * (L_cnn + L_trans).
LossTerms total_loss(const Tensor& y_tec, const Tensor& y_cnn, const Tensor& y_trans,
                     const Tensor& label, double lambda);

/// Soft Dice coefficient (1 - soft Dice loss) of sigmoid(logits); no tape.
double soft_dice(const Tensor& logits, const Tensor& label, double eps = 1.0);

}  // namespace tecnet
