#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tecnet/config.hpp"
#include "tecnet/ddconv.hpp"
#include "tecnet/layers.hpp"
#include "tecnet/transformer_block.hpp"

namespace tecnet {

enum class Branch { cnn, transformer };

struct StageFeature {
  Branch branch = Branch::cnn;
  std::size_t stage = 0;
  Tensor tensor;  // C_i x h_i x w_i
};

struct TecNetOutput {
  Tensor y_cnn;    // num_classes x H x W logits
  Tensor y_trans;
  Tensor y_tec;
  /// Per-stage outputs of both branches, filled when requested.
  std::vector<StageFeature> features;
};

/// 3x3 convolution of the CNN branch: a DDConv, or a plain convolution when
/// the dynamic deformable variant is switched off. Stride 2 pads bottom/right
/// so that even extents halve exactly.
class CnnConv {
 public:
  CnnConv() = default;
  CnnConv(std::size_t in, std::size_t out, std::size_t stride, const TecNetConfig& cfg, Rng& rng);

  Tensor forward(const Tensor& x) const;
  ParameterList parameters() const;
  std::uint64_t mac_count(std::size_t h, std::size_t w) const;
  static std::size_t parameter_count(std::size_t in, std::size_t out, const TecNetConfig& cfg);

 private:
  bool deformable_ = true;
  std::size_t stride_ = 1;
  DDConvLayer ddconv_;
  Conv2dLayer conv_;
};

/// 2x2 neighbourhood gather (C -> 4C on a halved grid), layer norm, then a
/// bias-free linear map 4C -> 2C.
class PatchMerging {
 public:
  PatchMerging() = default;
  PatchMerging(std::size_t channels, Rng& rng);
  /// tokens [h*w x C] -> [(h/2)*(w/2) x 2C]
  Tensor forward(const Tensor& tokens, std::size_t h, std::size_t w) const;
  ParameterList parameters() const;
  static std::size_t parameter_count(std::size_t channels);

 private:
  LayerNormLayer norm_;
  LinearLayer reduce_;
};

/// Bias-free linear map C -> 2C, pixel shuffle to C/2 features on a doubled
/// grid, then layer norm.
class PatchExpanding {
 public:
  PatchExpanding() = default;
  PatchExpanding(std::size_t channels, Rng& rng);
  /// tokens [h*w x C] -> [(2h)*(2w) x C/2]
  Tensor forward(const Tensor& tokens, std::size_t h, std::size_t w) const;
  ParameterList parameters() const;
  static std::size_t parameter_count(std::size_t channels);

 private:
  LinearLayer expand_;
  LayerNormLayer norm_;
};

/// Concatenates two equally shaped maps on channels and maps them back to
/// C channels with a 1x1 convolution.
Tensor cross_branch_fuse(const Conv2dLayer& fuse, const Tensor& a, const Tensor& b);

/// Dual-branch segmentation network.
///
/// Both branches run seven stages at matching widths and resolutions. In the
/// decoder each branch first merges its own encoder skip connection, then
/// fuses the other branch's skip-merged map before running its stage body.
/// Three 1x1 heads produce per-branch and fused logits at input resolution.
class TecNet {
 public:
  TecNet(const TecNetConfig& config, std::uint64_t seed);

  /// image [1 x S x S] with S == input_size.
  TecNetOutput forward(const Tensor& image, bool keep_features = false) const;

  /// Patch projection of the transformer branch with its channel layer norm:
  /// [1 x S x S] -> [D x S/p x S/p].
  Tensor patch_embed(const Tensor& image) const;

  const TecNetConfig& config() const { return config_; }
  /// Every trainable tensor with a stable dotted name. The first two name
  /// components identify the module (e.g. "trans.stage2", "cnn.down1").
  ParameterList parameters() const;

  /// Module key of a parameter name (its first two dotted components).
  static std::string module_of(const std::string& parameter_name);

 private:
  TecNetConfig config_;

  Conv2dLayer embed_;
  LayerNormLayer embed_norm_;
  std::vector<std::vector<TransformerBlock>> blocks_;
  std::vector<PatchMerging> merge_;      // index = stage
  std::vector<PatchExpanding> expand_;
  std::vector<LinearLayer> skip_trans_;
  std::vector<Conv2dLayer> fuse_trans_;

  Conv2dLayer stem_;
  std::vector<CnnConv> body_;
  std::vector<CnnConv> down_;
  std::vector<Conv2dLayer> up_;
  std::vector<Conv2dLayer> skip_cnn_;
  std::vector<Conv2dLayer> fuse_cnn_;

  Conv2dLayer head_cnn_, head_trans_, head_tec_;
};

}  // namespace tecnet
