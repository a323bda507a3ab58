#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace tecnet {

inline constexpr std::size_t kStages = 7;

/// Hyperparameters of the dual-branch network.
///
/// Stages 0-2 encode, stage 3 is the bottleneck and stages 4-6 decode. Stage
/// i has width base_width * 2^min(i, 6-i) on a grid of
/// (input_size / patch) / 2^min(i, 6-i) tokens per side.
struct TecNetConfig {
  std::string variant = "nano";
  std::array<std::size_t, kStages> layer_numbers{1, 1, 2, 1, 2, 1, 1};
  std::array<std::size_t, kStages> heads{1, 2, 4, 8, 4, 2, 1};
  std::size_t base_width = 16;
  std::size_t window = 4;
  std::size_t patch = 4;
  std::size_t input_size = 64;
  std::size_t num_classes = 1;
  std::size_t n_kernels = 4;
  bool use_ddconv = true;
  bool use_acam = true;
  bool use_lpm = true;
  bool shared_kv = false;

  static TecNetConfig nano();
  static TecNetConfig tiny();  // "T"
  static TecNetConfig base();  // "B"
  /// nano, T or B.
  static TecNetConfig variant_named(const std::string& name);

  std::size_t stage_width(std::size_t stage) const;
  std::size_t stage_grid(std::size_t stage) const;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  /// Canonical JSON text (sorted keys, two-space indent).
  std::string to_json() const;
  /// Parses and validates a JSON document. Syntax errors and misplaced values
  /// are reported with the line they occur on.
  static TecNetConfig from_json(const std::string& text);
  static TecNetConfig load(const std::string& path);

  /// FNV-1a 64-bit hash of to_json(), as 16 lowercase hex digits.
  std::string hash() const;

  bool operator==(const TecNetConfig&) const = default;
};

}  // namespace tecnet
