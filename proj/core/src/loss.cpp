#include "tecnet/loss.hpp"

#include <algorithm>
#include <cmath>

#include "tecnet/errors.hpp"
#include "tecnet/ops.hpp"

namespace tecnet {

double ramp_lambda(double k, double delta) {
  const double t = 1.0 - std::clamp(k, 0.0, 1.0);
  return delta * std::exp(-5.0 * t * t);
}

Tensor soft_dice_loss(const Tensor& probs, const Tensor& label, double eps) {
  if (probs.shape() != label.shape()) {
    throw DimensionError("dice loss: prediction " + shape_string(probs.shape()) + " vs label " +
                         shape_string(label.shape()));
  }
  const std::size_t channels = probs.ndim() == 3 ? probs.dim(0) : 1;
  Tensor acc;
  for (std::size_t c = 0; c < channels; ++c) {
    Tensor p = channels == 1 ? probs : slice(probs, 0, c, 1);
    Tensor g = channels == 1 ? label : slice(label, 0, c, 1);
    Tensor inter = add_scalar(scale(sum(mul(p, g)), 2.0), eps);
    Tensor denom = add_scalar(add(sum(p), sum(g)), eps);
    Tensor loss = add_scalar(scale(div(inter, denom), -1.0), 1.0);
    acc = acc.defined() ? add(acc, loss) : loss;
  }
  return channels == 1 ? acc : scale(acc, 1.0 / static_cast<double>(channels));
}

Tensor branch_loss(const Tensor& logits, const Tensor& label) {
  if (logits.shape() != label.shape()) {
    throw DimensionError("branch loss: logits " + shape_string(logits.shape()) + " vs label " +
                         shape_string(label.shape()));
  }
  Tensor p = sigmoid(logits);
  Tensor diff = sub(p, label);
  return add(mean(mul(diff, diff)), soft_dice_loss(p, label));
}

LossTerms total_loss(const Tensor& y_tec, const Tensor& y_cnn, const Tensor& y_trans,
                     const Tensor& label, double lambda) {
  LossTerms t;
  t.tec = branch_loss(y_tec, label);
  t.cnn = branch_loss(y_cnn, label);
  t.trans = branch_loss(y_trans, label);
  t.total = add(scale(t.tec, lambda), scale(add(t.cnn, t.trans), (1.0 - lambda) / 2.0));
  return t;
}

double soft_dice(const Tensor& logits, const Tensor& label, double eps) {
  NoGradScope no_grad;
  return 1.0 - soft_dice_loss(sigmoid(logits), label, eps).item();
}

}  // namespace tecnet
