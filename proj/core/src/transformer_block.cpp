#include "tecnet/transformer_block.hpp"

#include <string>

#include "tecnet/errors.hpp"
#include "tecnet/mac_counter.hpp"

namespace tecnet {

LpmLayer::LpmLayer(std::size_t d, Rng& rng)
    : primary_(d, 2 * d, true, rng),
      ghost_weight_(uniform_parameter({2 * d, 3, 3}, 9, rng)),
      ghost_bias_(constant_parameter({2 * d}, 0.0)),
      output_(4 * d, d, true, rng) {
  output_.zero();
}

Tensor LpmLayer::forward(const Tensor& tokens, std::size_t h, std::size_t w) const {
  if (tokens.ndim() != 2 || tokens.dim(0) != h * w) {
    throw UsageError("LPM: " + shape_string(tokens.shape()) + " tokens do not fill a " +
                     std::to_string(h) + "x" + std::to_string(w) + " grid");
  }
  Tensor primary = gelu(primary_.forward(tokens));
  Tensor ghost = gelu(depthwise_conv2d(from_tokens(primary, h, w), ghost_weight_, ghost_bias_));
  return output_.forward(concat({primary, to_tokens(ghost)}, 1));
}

ParameterList LpmLayer::parameters() const {
  ParameterList p;
  append_prefixed(p, "primary", primary_.parameters());
  p.push_back({"ghost.weight", ghost_weight_});
  p.push_back({"ghost.bias", ghost_bias_});
  append_prefixed(p, "output", output_.parameters());
  return p;
}

std::size_t LpmLayer::parameter_count(std::size_t d) {
  return LinearLayer::parameter_count(d, 2 * d, true) + 2 * d * 9 + 2 * d +
         LinearLayer::parameter_count(4 * d, d, true);
}

MlpLayer::MlpLayer(std::size_t d, Rng& rng) : hidden_(d, 4 * d, true, rng), output_(4 * d, d, true, rng) {
  output_.zero();
}

Tensor MlpLayer::forward(const Tensor& tokens) const {
  return output_.forward(gelu(hidden_.forward(tokens)));
}

ParameterList MlpLayer::parameters() const {
  ParameterList p;
  append_prefixed(p, "hidden", hidden_.parameters());
  append_prefixed(p, "output", output_.parameters());
  return p;
}

std::size_t MlpLayer::parameter_count(std::size_t d) {
  return LinearLayer::parameter_count(d, 4 * d, true) + LinearLayer::parameter_count(4 * d, d, true);
}

namespace {

AcamOptions acam_options(const BlockOptions& o) {
  AcamOptions a;
  a.channels = o.channels;
  a.heads = o.heads;
  a.window = o.window;
  a.grid_h = o.grid_h;
  a.grid_w = o.grid_w;
  a.shifted = o.shifted;
  a.shared_kv = o.shared_kv;
  return a;
}

WindowMsaOptions msa_options(const BlockOptions& o) {
  return {o.channels, o.heads, o.window, o.grid_h, o.grid_w, o.shifted};
}

}  // namespace

TransformerBlock::TransformerBlock(const BlockOptions& o, Rng& rng)
    : options_(o), norm1_(o.channels), norm2_(o.channels) {
  if (o.use_acam) {
    acam_ = AcamLayer(acam_options(o), rng);
  } else {
    msa_ = WindowMsaLayer(msa_options(o), rng);
  }
  if (o.use_lpm) {
    lpm_ = LpmLayer(o.channels, rng);
  } else {
    mlp_ = MlpLayer(o.channels, rng);
  }
}

Tensor TransformerBlock::attend(const Tensor& tokens) const {
  MacLabel label("attention");
  Tensor grid = from_tokens(tokens, options_.grid_h, options_.grid_w);
  return to_tokens(options_.use_acam ? acam_.forward(grid) : msa_.forward(grid));
}

Tensor TransformerBlock::feed_forward(const Tensor& tokens) const {
  MacLabel label("ffn");
  return options_.use_lpm ? lpm_.forward(tokens, options_.grid_h, options_.grid_w)
                          : mlp_.forward(tokens);
}

Tensor TransformerBlock::forward(const Tensor& tokens) const {
  if (tokens.ndim() != 2 || tokens.dim(0) != options_.grid_h * options_.grid_w ||
      tokens.dim(1) != options_.channels) {
    throw DimensionError("transformer block expects " +
                         shape_string({options_.grid_h * options_.grid_w, options_.channels}) +
                         " tokens, got " + shape_string(tokens.shape()));
  }
  Tensor t = add(attend(norm1_.forward(tokens)), tokens);
  return add(feed_forward(norm2_.forward(t)), t);
}

ParameterList TransformerBlock::parameters() const {
  ParameterList p;
  append_prefixed(p, "norm1", norm1_.parameters());
  if (options_.use_acam) {
    append_prefixed(p, "acam", acam_.parameters());
  } else {
    append_prefixed(p, "msa", msa_.parameters());
  }
  append_prefixed(p, "norm2", norm2_.parameters());
  if (options_.use_lpm) {
    append_prefixed(p, "lpm", lpm_.parameters());
  } else {
    append_prefixed(p, "mlp", mlp_.parameters());
  }
  return p;
}

void TransformerBlock::zero_outputs() {
  if (options_.use_acam) {
    acam_.zero_outputs();
  } else {
    msa_.zero_outputs();
  }
  if (options_.use_lpm) {
    lpm_.zero_output();
  } else {
    mlp_.zero_output();
  }
}

std::uint64_t TransformerBlock::mac_count(const BlockOptions& o) {
  const std::uint64_t n = o.grid_h * o.grid_w, d = o.channels;
  const std::uint64_t attention = o.use_acam ? AcamLayer::count_actual_macs(acam_options(o)).total()
                                             : WindowMsaLayer::mac_count(msa_options(o));
  // LPM: d -> 2d dense, 2d depthwise 3x3, 4d -> d dense. MLP: d -> 4d -> d.
  const std::uint64_t ffn = o.use_lpm ? n * (2 * d * d + 18 * d + 4 * d * d) : n * 8 * d * d;
  return attention + ffn;
}

std::size_t TransformerBlock::parameter_count(const BlockOptions& o) {
  const std::size_t attention = o.use_acam ? AcamLayer::parameter_count(acam_options(o))
                                           : WindowMsaLayer::parameter_count(msa_options(o));
  const std::size_t ffn = o.use_lpm ? LpmLayer::parameter_count(o.channels)
                                    : MlpLayer::parameter_count(o.channels);
  return 2 * LayerNormLayer::parameter_count(o.channels) + attention + ffn;
}

BlockPair::BlockPair(const BlockOptions& options, Rng& rng) {
  BlockOptions o = options;
  o.shifted = false;
  first_ = TransformerBlock(o, rng);
  o.shifted = true;
  second_ = TransformerBlock(o, rng);
}

Tensor BlockPair::forward(const Tensor& tokens) const {
  return second_.forward(first_.forward(tokens));
}

ParameterList BlockPair::parameters() const {
  ParameterList p;
  append_prefixed(p, "0", first_.parameters());
  append_prefixed(p, "1", second_.parameters());
  return p;
}

void BlockPair::zero_outputs() {
  first_.zero_outputs();
  second_.zero_outputs();
}

}  // namespace tecnet
