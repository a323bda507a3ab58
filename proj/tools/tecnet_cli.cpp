// tecnet command line: gen | train | eval | analyze | dump-features

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tecnet/analyzer.hpp"
#include "tecnet/checkpoint.hpp"
#include "tecnet/config.hpp"
#include "tecnet/dataset.hpp"
#include "tecnet/errors.hpp"
#include "tecnet/features.hpp"
#include "tecnet/ops.hpp"
#include "tecnet/pgm.hpp"
#include "tecnet/synth.hpp"
#include "tecnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace tecnet;

namespace {

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("TECNET_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw UsageError(std::string("TECNET_SEED is not an integer: ") + env);
    return v;
  }
  return flag;
}

GrayImage mask_image(const BinaryMask& m) {
  GrayImage g{m.width, m.height, std::vector<std::uint8_t>(m.cells.size())};
  for (std::size_t i = 0; i < m.cells.size(); ++i) g.pixels[i] = m.cells[i] ? 255 : 0;
  return g;
}

struct GenArgs {
  SynthSpec spec;
  std::string family = "ellipse";
  std::string out;
};

struct TrainArgs {
  std::string config, data, out, log;
  TrainOptions options;
  double val_fraction = 0.125;
};

struct EvalArgs {
  std::string checkpoint, config, data, out, split = "val";
};

struct AnalyzeArgs {
  std::string config, variant, mac_csv;
};

struct FeatureArgs {
  std::string checkpoint, config, image, out;
  std::uint64_t seed = 0;
};

int run_gen(GenArgs& a) {
  a.spec.family = parse_shape_family(a.family);
  a.spec.seed = effective_seed(a.spec.seed);
  if (a.spec.size < 32) throw UsageError("--size must be at least 32");
  if (!(a.spec.gap > 0.0 && a.spec.gap <= 1.0)) throw UsageError("--gap must lie in (0, 1]");
  if (a.spec.noise < 0.0) throw UsageError("--noise must be non-negative");
  generate(a.spec, a.out);
  std::cout << "wrote " << a.spec.count << " samples to " << a.out << "\n";
  return 0;
}

int run_train(TrainArgs& a) {
  const TecNetConfig cfg = TecNetConfig::load(a.config);
  a.options.seed = effective_seed(a.options.seed);
  const std::vector<SegSample> samples = load_dataset(a.data);
  const DatasetSplit split = split_dataset(samples, a.val_fraction);
  for (const SegSample& s : samples) {
    if (s.image.dim(1) != cfg.input_size || s.image.dim(2) != cfg.input_size) {
      throw UsageError("sample " + s.id + " is not " + std::to_string(cfg.input_size) + "x" +
                       std::to_string(cfg.input_size));
    }
  }
  fs::create_directories(a.out);
  const fs::path log_path = a.log.empty() ? fs::path(a.out) / "loss.csv" : fs::path(a.log);
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write " + log_path.string());
  a.options.log = &log;

  const TecNet model(cfg, a.options.seed);
  std::cout << "training on " << split.train.size() << " samples, validating on "
            << split.validation.size() << "\n";
  const TrainResult r = train(model, split, a.options);

  TrainingInfo info;
  info.seed = a.options.seed;
  info.steps = r.history.size();
  info.epochs = r.epochs;
  info.batch_size = a.options.batch_size;
  info.val_fraction = a.val_fraction;
  info.final_lr = r.final_lr;
  info.validation_dice = r.validation_dice;
  info.validation_samples = split.validation.size();
  info.data_dir = fs::absolute(a.data).string();
  save_checkpoint(a.out, model, info);

  const StepRecord& last = r.history.back();
  std::printf("steps %zu, epochs %zu, final loss %.6f, lr %.3g\n", r.history.size(), r.epochs,
              last.total, r.final_lr);
  if (!split.validation.empty()) std::printf("validation DI %.10f\n", r.validation_dice);
  std::cout << "checkpoint written to " << a.out << "\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  std::optional<TecNetConfig> expected;
  if (!a.config.empty()) expected = TecNetConfig::load(a.config);
  Checkpoint ck;
  const TecNet model = load_model(a.checkpoint, expected ? &*expected : nullptr, &ck);
  const std::string data = a.data.empty() ? ck.info.data_dir : a.data;
  const std::vector<SegSample> samples = load_dataset(data);
  std::vector<SegSample> chosen;
  if (a.split == "all") {
    chosen = samples;
  } else {
    chosen = split_dataset(samples, ck.info.val_fraction).validation;
    if (chosen.empty()) throw UsageError("checkpoint has no validation split; use --split all");
  }
  std::vector<BinaryMask> preds;
  const std::vector<SampleMetrics> rows = evaluate_model(model, chosen, &preds);

  const fs::path out(a.out);
  fs::create_directories(out / "pred");
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    write_pgm(out / "pred" / ("pred_" + chosen[i].id + ".pgm"), mask_image(preds[i]));
  }
  std::ofstream csv(out / "metrics.csv");
  if (!csv) throw IoError("cannot write " + (out / "metrics.csv").string());
  write_metrics_csv(csv, rows);
  std::printf("evaluated %zu samples, mean DI %.10f\n", rows.size(), mean_dice(rows));
  if (a.split == "val") std::printf("training-time validation DI %.10f\n", ck.info.validation_dice);
  return 0;
}

int run_analyze(const AnalyzeArgs& a) {
  const TecNetConfig cfg =
      a.config.empty() ? TecNetConfig::variant_named(a.variant) : TecNetConfig::load(a.config);
  cfg.validate();
  write_analysis(std::cout, cfg);
  if (!a.mac_csv.empty()) {
    std::ofstream csv(a.mac_csv);
    if (!csv) throw IoError("cannot write " + a.mac_csv);
    write_attention_mac_csv(csv, attention_mac_rows(cfg));
  }
  return 0;
}

int run_dump_features(const FeatureArgs& a) {
  std::optional<TecNet> model;
  if (!a.checkpoint.empty()) {
    model.emplace(load_model(a.checkpoint));
  } else {
    model.emplace(TecNetConfig::load(a.config), effective_seed(a.seed));
  }
  const std::size_t size = model->config().input_size;
  const GrayImage img = read_pgm(a.image);
  if (img.width != size || img.height != size) {
    throw UsageError("image must be " + std::to_string(size) + "x" + std::to_string(size));
  }
  const SegSample s = sample_from_images("input", img, GrayImage{size, size, std::vector<std::uint8_t>(size * size)});
  NoGradScope no_grad;
  const TecNetOutput y = model->forward(s.image, true);
  for (const fs::path& p : write_stage_features(y.features, size, a.out)) std::cout << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-branch CNN/transformer segmentation toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic segmentation dataset");
  g->add_option("--seed", gen.spec.seed, "random seed");
  g->add_option("--count", gen.spec.count, "number of samples")->required();
  g->add_option("--size", gen.spec.size, "image edge in pixels (>= 32)");
  g->add_option("--family", gen.family, "ellipse | blob-union");
  g->add_option("--gap", gen.spec.gap, "foreground minus background intensity, (0, 1]");
  g->add_option("--noise", gen.spec.noise, "Gaussian noise sigma");
  g->add_option("--gradient", gen.spec.gradient, "background gradient amplitude");
  g->add_option("--out", gen.out, "output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a model on a PGM dataset");
  t->add_option("--config", tr.config, "JSON model config")->required();
  t->add_option("--data", tr.data, "dataset directory (img_*.pgm, msk_*.pgm)")->required();
  t->add_option("--out", tr.out, "checkpoint directory")->required();
  t->add_option("--steps", tr.options.steps, "optimizer steps");
  t->add_option("--seed", tr.options.seed, "initialization and shuffling seed");
  t->add_option("--batch", tr.options.batch_size, "samples per step");
  t->add_option("--lr", tr.options.lr, "initial learning rate");
  t->add_option("--delta", tr.options.delta, "ramp-up amplitude of the fused-head weight");
  t->add_option("--val-fraction", tr.val_fraction, "held-out fraction, taken from the end");
  t->add_option("--log", tr.log, "loss CSV (default <out>/loss.csv)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint and write predictions");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint directory")->required();
  e->add_option("--config", ev.config, "expected config; must match the checkpoint");
  e->add_option("--data", ev.data, "dataset directory (default: the training data)");
  e->add_option("--split", ev.split, "val | all")->check(CLI::IsMember({"val", "all"}));
  e->add_option("--out", ev.out, "output directory")->required();

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "parameter, MAC and attention cost tables");
  auto* cfg_opt = a->add_option("--config", an.config, "JSON model config");
  a->add_option("--variant", an.variant, "nano | T | B")->excludes(cfg_opt);
  a->add_option("--mac-csv", an.mac_csv, "write per-branch attention MACs of every transformer block");

  FeatureArgs fe;
  auto* f = app.add_subcommand("dump-features", "write per-stage feature heatmaps");
  auto* ck_opt = f->add_option("--checkpoint", fe.checkpoint, "checkpoint directory");
  f->add_option("--config", fe.config, "config for a freshly initialized model")->excludes(ck_opt);
  f->add_option("--seed", fe.seed, "initialization seed when no checkpoint is given");
  f->add_option("--image", fe.image, "input PGM")->required();
  f->add_option("--out", fe.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*g) return run_gen(gen);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*a) {
      if (an.config.empty() && an.variant.empty()) throw UsageError("analyze needs --config or --variant");
      return run_analyze(an);
    }
    if (*f) {
      if (fe.checkpoint.empty() && fe.config.empty()) {
        throw UsageError("dump-features needs --checkpoint or --config");
      }
      return run_dump_features(fe);
    }
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
