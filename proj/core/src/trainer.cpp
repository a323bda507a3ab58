#include "tecnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "tecnet/checkpoint.hpp"
#include "tecnet/errors.hpp"
#include "tecnet/loss.hpp"
#include "tecnet/ops.hpp"
#include "tecnet/optim.hpp"
#include "tecnet/parallel.hpp"

namespace tecnet {

namespace {

struct BatchLoss {
  double total = 0, tec = 0, cnn = 0, trans = 0;
};

double monitor_loss(const TecNet& model, const std::vector<SegSample>& samples, double lambda) {
  NoGradScope no_grad;
  double acc = 0.0;
  for (const SegSample& s : samples) {
    const TecNetOutput y = model.forward(s.image);
    acc += total_loss(y.y_tec, y.y_cnn, y.y_trans, s.mask, lambda).total.item();
  }
  return acc / static_cast<double>(samples.size());
}

}  // namespace

void write_step_csv_header(std::ostream& os) {
  os << "step,epoch,lambda,lr,loss_total,loss_tec,loss_cnn,loss_trans\n";
}

void write_step_csv(std::ostream& os, const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.step, r.epoch,
                r.lambda, r.lr, r.total, r.tec, r.cnn, r.trans);
  os << buf;
}

TrainResult train(const TecNet& model, const DatasetSplit& data, const TrainOptions& o) {
  if (data.train.empty()) throw UsageError("training needs at least one sample");
  if (o.batch_size == 0 || o.steps == 0) throw UsageError("steps and batch size must be positive");
  const std::size_t n = data.train.size();
  const std::size_t batch = std::min(o.batch_size, n);
  const std::size_t per_epoch = (n + batch - 1) / batch;
  const std::size_t epochs = (o.steps + per_epoch - 1) / per_epoch;

  Adam adam(model.parameters());
  PlateauSchedule schedule(o.lr, o.plateau_patience, o.plateau_factor);
  std::mt19937_64 shuffle_rng(o.seed ^ 0x5eed5eed5eedull);
  std::vector<std::size_t> order(n);
  if (o.log != nullptr) write_step_csv_header(*o.log);

  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= epochs && step < o.steps; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double lambda =
        ramp_lambda(static_cast<double>(epoch) / static_cast<double>(epochs), o.delta);
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t start = 0; start < n && step < o.steps; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      Tape tape;
      BatchLoss logged;
      Tensor loss;
      {
        TapeScope scope(tape);
        for (std::size_t i = start; i < end; ++i) {
          const SegSample& s = data.train[order[i]];
          const TecNetOutput y = model.forward(s.image);
          const LossTerms t = total_loss(y.y_tec, y.y_cnn, y.y_trans, s.mask, lambda);
          loss = loss.defined() ? add(loss, t.total) : t.total;
          logged.tec += t.tec.item();
          logged.cnn += t.cnn.item();
          logged.trans += t.trans.item();
        }
        loss = scale(loss, 1.0 / static_cast<double>(end - start));
      }
      ++step;
      const double inv = 1.0 / static_cast<double>(end - start);
      StepRecord r{step, epoch, lambda, schedule.lr(), loss.item(),
                   logged.tec * inv, logged.cnn * inv, logged.trans * inv};
      if (!std::isfinite(r.total)) {
        throw DivergenceError("non-finite loss at step " + std::to_string(step) + " (epoch " +
                              std::to_string(epoch) + ", lr " + std::to_string(schedule.lr()) +
                              "): tec " + std::to_string(r.tec) + ", cnn " +
                              std::to_string(r.cnn) + ", trans " + std::to_string(r.trans));
      }
      tape.backward(loss);
      adam.step(schedule.lr());
      if (o.log != nullptr) write_step_csv(*o.log, r);
      result.history.push_back(r);
      epoch_loss += r.total;
      ++epoch_steps;
    }
    const double monitored = data.validation.empty()
                                 ? epoch_loss / static_cast<double>(epoch_steps)
                                 : monitor_loss(model, data.validation, lambda);
    result.epoch_monitor_loss.push_back(monitored);
    schedule.observe(monitored);
    result.epochs = epoch;
  }
  result.final_lr = schedule.lr();
  round_parameters_to_f32(model);
  if (!data.validation.empty()) result.validation_dice = mean_dice(evaluate_model(model, data.validation));
  return result;
}

BinaryMask threshold_logits(const Tensor& logits) {
  if (logits.ndim() != 3 || logits.dim(0) != 1) {
    throw DimensionError("expected a single-class logit map, got " + shape_string(logits.shape()));
  }
  BinaryMask m(logits.dim(1), logits.dim(2));
  auto v = logits.values();
  for (std::size_t i = 0; i < v.size(); ++i) m.cells[i] = v[i] > 0.0 ? 1 : 0;
  return m;
}

BinaryMask mask_from_tensor(const Tensor& mask) {
  BinaryMask m(mask.dim(1), mask.dim(2));
  auto v = mask.values();
  for (std::size_t i = 0; i < v.size(); ++i) m.cells[i] = v[i] >= 0.5 ? 1 : 0;
  return m;
}

std::vector<SampleMetrics> evaluate_model(const TecNet& model, const std::vector<SegSample>& samples,
                                          std::vector<BinaryMask>* predictions) {
  std::vector<SampleMetrics> rows(samples.size());
  std::vector<BinaryMask> preds(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    NoGradScope no_grad;
    preds[i] = threshold_logits(model.forward(samples[i].image).y_tec);
    rows[i] = evaluate_pair(samples[i].id, preds[i], mask_from_tensor(samples[i].mask));
  });
  if (predictions != nullptr) *predictions = std::move(preds);
  return rows;
}

double mean_dice(const std::vector<SampleMetrics>& rows) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (const SampleMetrics& r : rows) acc += r.confusion.dice;
  return acc / static_cast<double>(rows.size());
}

}  // namespace tecnet
