#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

#include "tecnet/attention.hpp"
#include "tecnet/layers.hpp"

namespace tecnet {

/// Ghost-style feed-forward: half of the 4d hidden features come from a dense
/// map, the other half from a depthwise 3x3 convolution of the first half laid
/// out on the token grid.
class LpmLayer {
 public:
  LpmLayer() = default;
  LpmLayer(std::size_t d, Rng& rng);

  /// tokens [N x d] with N == h * w.
  Tensor forward(const Tensor& tokens, std::size_t h, std::size_t w) const;
  ParameterList parameters() const;
  void zero_output() { output_.zero(); }

  static std::size_t parameter_count(std::size_t d);

 private:
  LinearLayer primary_;
  Tensor ghost_weight_;  // [2d x 3 x 3]
  Tensor ghost_bias_;
  LinearLayer output_;
};

/// Standard two-layer feed-forward d -> 4d -> d with GELU.
class MlpLayer {
 public:
  MlpLayer() = default;
  MlpLayer(std::size_t d, Rng& rng);

  Tensor forward(const Tensor& tokens) const;
  ParameterList parameters() const;
  void zero_output() { output_.zero(); }

  static std::size_t parameter_count(std::size_t d);

 private:
  LinearLayer hidden_;
  LinearLayer output_;
};

struct BlockOptions {
  std::size_t channels = 8;
  std::size_t heads = 1;
  std::size_t window = 4;
  std::size_t grid_h = 4;
  std::size_t grid_w = 4;
  bool shifted = false;
  bool use_acam = true;
  bool use_lpm = true;
  bool shared_kv = false;
};

/// Pre-norm residual block: t' = Attn(LN(t)) + t; out = FFN(LN(t')) + t'.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const BlockOptions& options, Rng& rng);

  /// tokens [N x C] laid out row-major on the configured grid.
  Tensor forward(const Tensor& tokens) const;
  ParameterList parameters() const;
  /// Zeroes the attention and feed-forward output maps (identity block).
  void zero_outputs();

  const BlockOptions& options() const { return options_; }
  const AcamLayer& acam() const { return acam_; }
  AcamLayer& acam() { return acam_; }
  const LpmLayer& lpm() const { return lpm_; }
  const LayerNormLayer& norm1() const { return norm1_; }
  const LayerNormLayer& norm2() const { return norm2_; }

  std::uint64_t mac_count() const { return mac_count(options_); }
  static std::uint64_t mac_count(const BlockOptions& o);
  static std::size_t parameter_count(const BlockOptions& o);

 private:
  Tensor attend(const Tensor& tokens) const;
  Tensor feed_forward(const Tensor& tokens) const;

  BlockOptions options_;
  LayerNormLayer norm1_, norm2_;
  AcamLayer acam_;
  WindowMsaLayer msa_;
  LpmLayer lpm_;
  MlpLayer mlp_;
};

/// An unshifted block followed by a shifted block.
class BlockPair {
 public:
  BlockPair() = default;
  /// `options.shifted` is ignored; the first block is unshifted, the second shifted.
  BlockPair(const BlockOptions& options, Rng& rng);

  Tensor forward(const Tensor& tokens) const;
  ParameterList parameters() const;
  void zero_outputs();

  TransformerBlock& first() { return first_; }
  TransformerBlock& second() { return second_; }

 private:
  TransformerBlock first_, second_;
};

}  // namespace tecnet
