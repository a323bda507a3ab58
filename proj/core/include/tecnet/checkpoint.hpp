#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tecnet/config.hpp"
#include "tecnet/model.hpp"
#include "tecnet/parameters.hpp"

namespace tecnet {

/// Training facts recorded next to the weights.
struct TrainingInfo {
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t epochs = 0;
  std::uint64_t batch_size = 0;
  double val_fraction = 0.0;
  double final_lr = 0.0;
  /// Mean DI (percent) of the fused head over the held-out split after training.
  double validation_dice = 0.0;
  std::uint64_t validation_samples = 0;
  std::string data_dir;
};

struct Checkpoint {
  TecNetConfig config;
  std::string config_hash;
  TrainingInfo info;
  ParameterList tensors;
};

/// Writes <dir>/model.tect (concatenated tensor records) and
/// <dir>/manifest.json (config, config hash, training info, and for every
/// tensor its name, shape and byte offset into model.tect).
void save_checkpoint(const std::filesystem::path& dir, const TecNet& model, const TrainingInfo& info);

/// Reads a checkpoint and checks that every record matches the manifest.
Checkpoint read_checkpoint(const std::filesystem::path& dir);

/// Copies checkpoint tensors into a model built from the same config.
void restore_parameters(const TecNet& model, const ParameterList& tensors);

/// Reads a checkpoint and rebuilds its model. When `expected` is given its
/// hash must equal the stored config hash.
TecNet load_model(const std::filesystem::path& dir, const TecNetConfig* expected = nullptr,
                  Checkpoint* checkpoint = nullptr);

/// Rounds every parameter to the nearest 32-bit float, the precision the
/// checkpoint stores, so that a reloaded model computes identical outputs.
void round_parameters_to_f32(const TecNet& model);

}  // namespace tecnet
