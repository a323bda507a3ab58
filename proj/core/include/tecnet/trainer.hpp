#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "tecnet/dataset.hpp"
#include "tecnet/metrics.hpp"
#include "tecnet/model.hpp"

namespace tecnet {

struct TrainOptions {
  std::size_t steps = 300;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  /// Amplitude of the ramp-up weight of the fused head.
  double delta = 1.0;
  std::size_t plateau_patience = 10;
  double plateau_factor = 0.5;
  /// CSV loss log (step,epoch,lambda,lr,loss_total,loss_tec,loss_cnn,loss_trans); optional.
  std::ostream* log = nullptr;
};

struct StepRecord {
  std::size_t step = 0;   // 1-based
  std::size_t epoch = 0;  // 1-based
  double lambda = 0, lr = 0;
  double total = 0, tec = 0, cnn = 0, trans = 0;
};

struct TrainResult {
  std::vector<StepRecord> history;
  std::vector<double> epoch_monitor_loss;
  std::size_t epochs = 0;
  double final_lr = 0;
  /// Mean DI (percent) of the fused head on the validation split, computed
  /// after parameters were rounded to checkpoint precision; 0 without a split.
  double validation_dice = 0;
};

/// Adam on the ramp-weighted three-head loss. An epoch is one pass over the
/// (per-epoch shuffled) training split; the ramp progress of epoch e of E is
/// e / E. After each epoch the validation loss (training loss when there is
/// no validation split) drives the plateau schedule. Throws DivergenceError on
/// a non-finite loss.
TrainResult train(const TecNet& model, const DatasetSplit& data, const TrainOptions& options);

void write_step_csv_header(std::ostream& os);
void write_step_csv(std::ostream& os, const StepRecord& r);

/// Binary prediction of a logit map (probability > 0.5).
BinaryMask threshold_logits(const Tensor& logits);
BinaryMask mask_from_tensor(const Tensor& mask);

/// Metrics of the fused head for every sample; predicted masks are returned
/// through `predictions` when non-null.
std::vector<SampleMetrics> evaluate_model(const TecNet& model, const std::vector<SegSample>& samples,
                                          std::vector<BinaryMask>* predictions = nullptr);
double mean_dice(const std::vector<SampleMetrics>& rows);

}  // namespace tecnet
