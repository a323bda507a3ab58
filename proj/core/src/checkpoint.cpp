#include "tecnet/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tecnet/errors.hpp"
#include "tecnet/tensor_io.hpp"

namespace tecnet {

using nlohmann::json;

namespace {

json info_to_json(const TrainingInfo& i) {
  return {{"seed", i.seed},
          {"steps", i.steps},
          {"epochs", i.epochs},
          {"batch_size", i.batch_size},
          {"val_fraction", i.val_fraction},
          {"final_lr", i.final_lr},
          {"validation_dice", i.validation_dice},
          {"validation_samples", i.validation_samples},
          {"data_dir", i.data_dir}};
}

TrainingInfo info_from_json(const json& j) {
  TrainingInfo i;
  i.seed = j.at("seed").get<std::uint64_t>();
  i.steps = j.at("steps").get<std::uint64_t>();
  i.epochs = j.at("epochs").get<std::uint64_t>();
  i.batch_size = j.at("batch_size").get<std::uint64_t>();
  i.val_fraction = j.at("val_fraction").get<double>();
  i.final_lr = j.at("final_lr").get<double>();
  i.validation_dice = j.at("validation_dice").get<double>();
  i.validation_samples = j.at("validation_samples").get<std::uint64_t>();
  i.data_dir = j.at("data_dir").get<std::string>();
  return i;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const TecNet& model, const TrainingInfo& info) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream weights(dir / "model.tect", std::ios::binary);
  if (!weights) throw IoError("cannot write " + (dir / "model.tect").string());
  json tensors = json::array();
  std::size_t offset = 0;
  for (const NamedTensor& p : model.parameters()) {
    write_tensor(weights, p.tensor);
    tensors.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    offset += tensor_record_size(p.tensor.shape());
  }
  weights.close();
  if (!weights) throw IoError("failed writing " + (dir / "model.tect").string());

  json manifest;
  manifest["format"] = "tecnet-checkpoint";
  manifest["version"] = 1;
  manifest["config"] = json::parse(model.config().to_json());
  manifest["config_hash"] = model.config().hash();
  manifest["training"] = info_to_json(info);
  manifest["tensors"] = std::move(tensors);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + (dir / "manifest.json").string());
}

Checkpoint read_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed manifest.json: " + std::string(e.what()));
  }
  Checkpoint cp;
  try {
    cp.config = TecNetConfig::from_json(manifest.at("config").dump(2));
    cp.config_hash = manifest.at("config_hash").get<std::string>();
    cp.info = info_from_json(manifest.at("training"));
  } catch (const json::exception& e) {
    throw IoError("incomplete manifest.json: " + std::string(e.what()));
  }
  if (cp.config.hash() != cp.config_hash) {
    throw IoError("manifest config hash " + cp.config_hash + " does not match its config (" +
                  cp.config.hash() + ")");
  }
  std::ifstream weights(dir / "model.tect", std::ios::binary);
  if (!weights) throw IoError("no model.tect in " + dir.string());
  for (const json& entry : manifest.at("tensors")) {
    const auto offset = entry.at("offset").get<std::size_t>();
    if (static_cast<std::size_t>(weights.tellg()) != offset) {
      throw IoError("model.tect offset mismatch at " + entry.at("name").get<std::string>());
    }
    Tensor t = read_tensor(weights);
    if (t.shape() != entry.at("shape").get<Shape>()) {
      throw IoError("model.tect shape mismatch at " + entry.at("name").get<std::string>());
    }
    cp.tensors.push_back({entry.at("name").get<std::string>(), t});
  }
  if (weights.peek() != std::ifstream::traits_type::eof()) {
    throw IoError("model.tect has trailing bytes after the last manifest entry");
  }
  return cp;
}

void restore_parameters(const TecNet& model, const ParameterList& tensors) {
  const ParameterList params = model.parameters();
  if (params.size() != tensors.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(tensors.size()) +
                      " tensors, the model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != tensors[i].name || params[i].tensor.shape() != tensors[i].tensor.shape()) {
      throw ConfigError("checkpoint tensor " + tensors[i].name + " " +
                        shape_string(tensors[i].tensor.shape()) + " does not match model tensor " +
                        params[i].name + " " + shape_string(params[i].tensor.shape()));
    }
    Tensor dst = params[i].tensor;
    auto src = tensors[i].tensor.values();
    std::copy(src.begin(), src.end(), dst.mutable_values().begin());
  }
}

TecNet load_model(const std::filesystem::path& dir, const TecNetConfig* expected,
                  Checkpoint* checkpoint) {
  Checkpoint cp = read_checkpoint(dir);
  if (expected != nullptr && expected->hash() != cp.config_hash) {
    throw ConfigError("config hash mismatch: checkpoint was trained with config " +
                      cp.config_hash + ", given config hashes to " + expected->hash());
  }
  TecNet model(cp.config, cp.info.seed);
  restore_parameters(model, cp.tensors);
  if (checkpoint != nullptr) *checkpoint = std::move(cp);
  return model;
}

void round_parameters_to_f32(const TecNet& model) {
  for (NamedTensor p : model.parameters()) {
    for (double& v : p.tensor.mutable_values()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace tecnet
