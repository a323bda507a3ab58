#include "tecnet/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tecnet/errors.hpp"

namespace tecnet {

using nlohmann::json;

namespace {

std::size_t scale_exponent(std::size_t stage) { return std::min(stage, kStages - 1 - stage); }

// 1-based line of byte offset `pos` in `text`.
std::size_t line_of(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

// Line on which `"key"` first appears, or 0 when absent.
std::size_t key_line(const std::string& text, const std::string& key) {
  const std::size_t pos = text.find('"' + key + '"');
  return pos == std::string::npos ? 0 : line_of(text, pos);
}

[[noreturn]] void fail_at(const std::string& text, const std::string& key, const std::string& what) {
  const std::size_t line = key_line(text, key);
  std::string msg = "config";
  if (line > 0) msg += " line " + std::to_string(line);
  throw ConfigError(msg + ": " + what);
}

std::size_t read_count(const json& doc, const std::string& text, const std::string& key) {
  if (!doc.contains(key)) throw ConfigError("config: missing required key \"" + key + "\"");
  const json& v = doc.at(key);
  if (!v.is_number_unsigned()) fail_at(text, key, "\"" + key + "\" must be a non-negative integer");
  return v.get<std::size_t>();
}

std::array<std::size_t, kStages> read_stages(const json& doc, const std::string& text,
                                             const std::string& key) {
  if (!doc.contains(key)) throw ConfigError("config: missing required key \"" + key + "\"");
  const json& v = doc.at(key);
  if (!v.is_array() || v.size() != kStages) {
    fail_at(text, key, "\"" + key + "\" must be an array of 7 integers");
  }
  std::array<std::size_t, kStages> out{};
  for (std::size_t i = 0; i < kStages; ++i) {
    if (!v[i].is_number_unsigned()) fail_at(text, key, "\"" + key + "\" entries must be integers");
    out[i] = v[i].get<std::size_t>();
  }
  return out;
}

bool read_toggle(const json& doc, const std::string& text, const std::string& key, bool fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_boolean()) fail_at(text, key, "\"" + key + "\" must be true or false");
  return doc.at(key).get<bool>();
}

}  // namespace

TecNetConfig TecNetConfig::nano() { return TecNetConfig{}; }

TecNetConfig TecNetConfig::tiny() {
  TecNetConfig c;
  c.variant = "T";
  c.layer_numbers = {2, 2, 6, 2, 6, 2, 2};
  c.heads = {3, 6, 12, 24, 12, 6, 3};
  c.base_width = 96;
  c.window = 7;
  c.input_size = 224;
  return c;
}

TecNetConfig TecNetConfig::base() {
  TecNetConfig c = tiny();
  c.variant = "B";
  c.layer_numbers = {2, 2, 18, 2, 18, 2, 2};
  c.heads = {4, 8, 16, 32, 16, 8, 4};
  c.base_width = 128;
  return c;
}

TecNetConfig TecNetConfig::variant_named(const std::string& name) {
  if (name == "nano") return nano();
  if (name == "T" || name == "t") return tiny();
  if (name == "B" || name == "b") return base();
  throw ConfigError("unknown variant \"" + name + "\" (expected nano, T or B)");
}

std::size_t TecNetConfig::stage_width(std::size_t stage) const {
  return base_width << scale_exponent(stage);
}

std::size_t TecNetConfig::stage_grid(std::size_t stage) const {
  return (input_size / patch) >> scale_exponent(stage);
}

void TecNetConfig::validate() const {
  if (base_width == 0 || window == 0 || patch == 0 || input_size == 0 || num_classes == 0 ||
      n_kernels == 0) {
    throw ConfigError("config: base_width, window, patch, input_size, num_classes and n_kernels "
                      "must be positive");
  }
  for (std::size_t i = 0; i < kStages; ++i) {
    if (layer_numbers[i] == 0 || heads[i] == 0) {
      throw ConfigError("config: stage " + std::to_string(i) + " needs at least one layer and head");
    }
    if (layer_numbers[i] != layer_numbers[kStages - 1 - i] || heads[i] != heads[kStages - 1 - i]) {
      throw ConfigError("config: layer_numbers and heads must be symmetric (stage " +
                        std::to_string(i) + " vs " + std::to_string(kStages - 1 - i) + ")");
    }
  }
  const std::size_t cells = 8 * patch;
  if (input_size % cells != 0) {
    throw ConfigError("config: input_size " + std::to_string(input_size) +
                      " must be a multiple of 8 * patch = " + std::to_string(cells));
  }
  for (std::size_t i = 0; i < kStages; ++i) {
    const std::size_t c = stage_width(i);
    if (use_acam && c % (8 * heads[i]) != 0) {
      throw ConfigError("config: stage " + std::to_string(i) + " width " + std::to_string(c) +
                        " is not divisible by 8 * heads = " + std::to_string(8 * heads[i]));
    }
    if (!use_acam && c % heads[i] != 0) {
      throw ConfigError("config: stage " + std::to_string(i) + " width " + std::to_string(c) +
                        " is not divisible by " + std::to_string(heads[i]) + " heads");
    }
  }
}

std::string TecNetConfig::to_json() const {
  json j;
  j["variant"] = variant;
  j["layer_numbers"] = layer_numbers;
  j["heads"] = heads;
  j["base_width"] = base_width;
  j["window"] = window;
  j["patch"] = patch;
  j["input_size"] = input_size;
  j["num_classes"] = num_classes;
  j["n_kernels"] = n_kernels;
  j["use_ddconv"] = use_ddconv;
  j["use_acam"] = use_acam;
  j["use_lpm"] = use_lpm;
  j["shared_kv"] = shared_kv;
  return j.dump(2) + "\n";
}

TecNetConfig TecNetConfig::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config line " + std::to_string(line_of(text, e.byte > 0 ? e.byte - 1 : 0)) +
                      ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config line 1: top level must be a JSON object");
  static const char* known[] = {"variant",   "layer_numbers", "heads",     "base_width",
                                "window",    "patch",         "input_size", "num_classes",
                                "n_kernels", "use_ddconv",    "use_acam",   "use_lpm",
                                "shared_kv"};
  for (const auto& item : doc.items()) {
    if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
      fail_at(text, item.key(), "unknown key \"" + item.key() + "\"");
    }
  }
  TecNetConfig c;
  if (!doc.contains("variant")) throw ConfigError("config: missing required key \"variant\"");
  if (!doc.at("variant").is_string()) fail_at(text, "variant", "\"variant\" must be a string");
  c.variant = doc.at("variant").get<std::string>();
  c.layer_numbers = read_stages(doc, text, "layer_numbers");
  c.heads = read_stages(doc, text, "heads");
  c.base_width = read_count(doc, text, "base_width");
  c.window = read_count(doc, text, "window");
  c.patch = read_count(doc, text, "patch");
  c.input_size = read_count(doc, text, "input_size");
  c.num_classes = read_count(doc, text, "num_classes");
  c.n_kernels = read_count(doc, text, "n_kernels");
  c.use_ddconv = read_toggle(doc, text, "use_ddconv", true);
  c.use_acam = read_toggle(doc, text, "use_acam", true);
  c.use_lpm = read_toggle(doc, text, "use_lpm", true);
  c.shared_kv = read_toggle(doc, text, "shared_kv", false);
  c.validate();
  return c;
}

TecNetConfig TecNetConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string TecNetConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tecnet
