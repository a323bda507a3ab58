#include "tecnet/model.hpp"

#include <string>

#include "tecnet/errors.hpp"
#include "tecnet/mac_counter.hpp"

namespace tecnet {

// CnnConv --------------------------------------------------------------------

CnnConv::CnnConv(std::size_t in, std::size_t out, std::size_t stride, const TecNetConfig& cfg,
                 Rng& rng)
    : deformable_(cfg.use_ddconv), stride_(stride) {
  if (deformable_) {
    DDConvOptions o;
    o.in_channels = in;
    o.out_channels = out;
    o.kernel = 3;
    o.n_kernels = cfg.n_kernels;
    o.stride = stride;
    ddconv_ = DDConvLayer(o, rng);
  } else {
    conv_ = Conv2dLayer(in, out, 3, {stride, stride == 1 ? std::size_t{1} : std::size_t{0}}, rng);
  }
}

Tensor CnnConv::forward(const Tensor& x) const {
  if (deformable_) return ddconv_.forward(x);
  if (stride_ == 1) return conv_.forward(x);
  return conv_.forward(pad2d(x, 0, 1, 0, 1));
}

ParameterList CnnConv::parameters() const {
  return deformable_ ? ddconv_.parameters() : conv_.parameters();
}

std::uint64_t CnnConv::mac_count(std::size_t h, std::size_t w) const {
  if (deformable_) return DDConvLayer::mac_count(ddconv_.options(), h, w);
  const std::uint64_t ho = (h + stride_ - 1) / stride_, wo = (w + stride_ - 1) / stride_;
  return 9 * conv_.weight().dim(0) * conv_.weight().dim(1) * ho * wo;
}

std::size_t CnnConv::parameter_count(std::size_t in, std::size_t out, const TecNetConfig& cfg) {
  if (!cfg.use_ddconv) return Conv2dLayer::parameter_count(in, out, 3);
  DDConvOptions o;
  o.in_channels = in;
  o.out_channels = out;
  o.n_kernels = cfg.n_kernels;
  return DDConvLayer::parameter_count(o);
}

// Patch merging / expanding ----------------------------------------------------

PatchMerging::PatchMerging(std::size_t channels, Rng& rng)
    : norm_(4 * channels), reduce_(4 * channels, 2 * channels, false, rng) {}

Tensor PatchMerging::forward(const Tensor& tokens, std::size_t h, std::size_t w) const {
  const std::size_t c = tokens.dim(1);
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("patch merging needs even grid extents, got " + std::to_string(h) + "x" +
                         std::to_string(w));
  }
  // Feature order of the gathered 2x2 cell: (0,0), (1,0), (0,1), (1,1) as (dy, dx).
  Tensor t = reshape(tokens, {h / 2, 2, w / 2, 2, c});
  t = reshape(permute(t, {0, 2, 3, 1, 4}), {(h / 2) * (w / 2), 4 * c});
  return reduce_.forward(norm_.forward(t));
}

ParameterList PatchMerging::parameters() const {
  ParameterList p;
  append_prefixed(p, "norm", norm_.parameters());
  append_prefixed(p, "reduce", reduce_.parameters());
  return p;
}

std::size_t PatchMerging::parameter_count(std::size_t channels) {
  return LayerNormLayer::parameter_count(4 * channels) +
         LinearLayer::parameter_count(4 * channels, 2 * channels, false);
}

PatchExpanding::PatchExpanding(std::size_t channels, Rng& rng)
    : expand_(channels, 2 * channels, false, rng), norm_(channels / 2) {}

Tensor PatchExpanding::forward(const Tensor& tokens, std::size_t h, std::size_t w) const {
  const std::size_t c = tokens.dim(1);
  Tensor t = reshape(expand_.forward(tokens), {h, w, 2, 2, c / 2});
  t = reshape(permute(t, {0, 2, 1, 3, 4}), {4 * h * w, c / 2});
  return norm_.forward(t);
}

ParameterList PatchExpanding::parameters() const {
  ParameterList p;
  append_prefixed(p, "expand", expand_.parameters());
  append_prefixed(p, "norm", norm_.parameters());
  return p;
}

std::size_t PatchExpanding::parameter_count(std::size_t channels) {
  return LinearLayer::parameter_count(channels, 2 * channels, false) +
         LayerNormLayer::parameter_count(channels / 2);
}

Tensor cross_branch_fuse(const Conv2dLayer& fuse, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("cross-branch fusion of " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  return fuse.forward(concat({a, b}, 0));
}

// TecNet --------------------------------------------------------------------------

namespace {

std::string stage_key(const char* branch, const char* part, std::size_t i) {
  return std::string(branch) + "." + part + std::to_string(i);
}

}  // namespace

TecNet::TecNet(const TecNetConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const TecNetConfig& c = config_;
  const std::size_t p = c.patch;

  embed_ = Conv2dLayer(1, c.base_width, p, {p, 0}, rng);
  embed_norm_ = LayerNormLayer(c.base_width);
  stem_ = Conv2dLayer(1, c.base_width, p, {p, 0}, rng);

  blocks_.resize(kStages);
  merge_.resize(kStages);
  expand_.resize(kStages);
  skip_trans_.resize(kStages);
  fuse_trans_.resize(kStages);
  body_.resize(kStages);
  down_.resize(kStages);
  up_.resize(kStages);
  skip_cnn_.resize(kStages);
  fuse_cnn_.resize(kStages);

  for (std::size_t i = 0; i < kStages; ++i) {
    const std::size_t width = c.stage_width(i), grid = c.stage_grid(i);
    if (i >= 1 && i <= 3) {
      merge_[i] = PatchMerging(c.stage_width(i - 1), rng);
      down_[i] = CnnConv(c.stage_width(i - 1), width, 2, c, rng);
    }
    if (i >= 4) {
      expand_[i] = PatchExpanding(c.stage_width(i - 1), rng);
      up_[i] = Conv2dLayer(c.stage_width(i - 1), width, 3, {1, 1}, rng);
      skip_trans_[i] = LinearLayer(2 * width, width, true, rng);
      skip_cnn_[i] = Conv2dLayer(2 * width, width, 1, {}, rng);
      fuse_trans_[i] = Conv2dLayer(2 * width, width, 1, {}, rng);
      fuse_cnn_[i] = Conv2dLayer(2 * width, width, 1, {}, rng);
    }
    for (std::size_t j = 0; j < c.layer_numbers[i]; ++j) {
      BlockOptions o;
      o.channels = width;
      o.heads = c.heads[i];
      o.window = c.window;
      o.grid_h = o.grid_w = grid;
      o.shifted = j % 2 == 1;
      o.use_acam = c.use_acam;
      o.use_lpm = c.use_lpm;
      o.shared_kv = c.shared_kv;
      blocks_[i].emplace_back(o, rng);
    }
    body_[i] = CnnConv(width, width, 1, c, rng);
  }
  head_cnn_ = Conv2dLayer(c.base_width, c.num_classes, 1, {}, rng);
  head_trans_ = Conv2dLayer(c.base_width, c.num_classes, 1, {}, rng);
  head_tec_ = Conv2dLayer(2 * c.base_width, c.num_classes, 1, {}, rng);
}

Tensor TecNet::patch_embed(const Tensor& image) const {
  return channel_layernorm(embed_norm_, embed_.forward(image));
}

TecNetOutput TecNet::forward(const Tensor& image, bool keep_features) const {
  const TecNetConfig& c = config_;
  if (image.ndim() != 3 || image.dim(0) != 1 || image.dim(1) != c.input_size ||
      image.dim(2) != c.input_size) {
    throw DimensionError("network expects a 1x" + std::to_string(c.input_size) + "x" +
                         std::to_string(c.input_size) + " image, got " +
                         shape_string(image.shape()));
  }
  TecNetOutput out;
  Tensor t, m;
  {
    MacLabel label("trans.embed");
    t = to_tokens(patch_embed(image));
  }
  {
    MacLabel label("cnn.stem");
    m = gelu(stem_.forward(image));
  }
  std::vector<Tensor> skip_t(kStages), skip_m(kStages);
  for (std::size_t i = 0; i < kStages; ++i) {
    const std::size_t grid = c.stage_grid(i);
    if (i >= 1 && i <= 3) {
      const std::size_t prev = c.stage_grid(i - 1);
      {
        MacLabel label(stage_key("trans", "merge", i));
        t = merge_[i].forward(t, prev, prev);
      }
      MacLabel label(stage_key("cnn", "down", i));
      m = gelu(down_[i].forward(m));
    }
    if (i >= 4) {
      const std::size_t prev = c.stage_grid(i - 1);
      Tensor tm, ms;
      {
        MacLabel label(stage_key("trans", "expand", i));
        t = expand_[i].forward(t, prev, prev);
      }
      {
        MacLabel label(stage_key("cnn", "up", i));
        m = gelu(up_[i].forward(upsample_nearest(m, 2)));
      }
      {
        MacLabel label(stage_key("trans", "skip", i));
        tm = from_tokens(skip_trans_[i].forward(concat({t, skip_t[kStages - 1 - i]}, 1)), grid, grid);
      }
      {
        MacLabel label(stage_key("cnn", "skip", i));
        ms = skip_cnn_[i].forward(concat({m, skip_m[kStages - 1 - i]}, 0));
      }
      {
        MacLabel label(stage_key("trans", "fuse", i));
        t = to_tokens(cross_branch_fuse(fuse_trans_[i], tm, ms));
      }
      MacLabel label(stage_key("cnn", "fuse", i));
      m = cross_branch_fuse(fuse_cnn_[i], ms, tm);
    }
    {
      MacLabel label(stage_key("trans", "stage", i));
      for (const TransformerBlock& block : blocks_[i]) t = block.forward(t);
    }
    {
      MacLabel label(stage_key("cnn", "body", i));
      m = gelu(body_[i].forward(m));
    }
    if (i < 3) {
      skip_t[i] = t;
      skip_m[i] = m;
    }
    if (keep_features) {
      out.features.push_back({Branch::cnn, i, m});
      out.features.push_back({Branch::transformer, i, from_tokens(t, grid, grid)});
    }
  }
  const std::size_t g0 = c.stage_grid(kStages - 1);
  Tensor tmap = from_tokens(t, g0, g0);
  {
    MacLabel label("head.cnn");
    out.y_cnn = upsample_bilinear(head_cnn_.forward(m), c.patch);
  }
  {
    MacLabel label("head.trans");
    out.y_trans = upsample_bilinear(head_trans_.forward(tmap), c.patch);
  }
  MacLabel label("head.tec");
  out.y_tec = upsample_bilinear(head_tec_.forward(concat({m, tmap}, 0)), c.patch);
  return out;
}

ParameterList TecNet::parameters() const {
  ParameterList p;
  append_prefixed(p, "trans.embed.conv", embed_.parameters());
  append_prefixed(p, "trans.embed.norm", embed_norm_.parameters());
  append_prefixed(p, "cnn.stem", stem_.parameters());
  for (std::size_t i = 0; i < kStages; ++i) {
    if (i >= 1 && i <= 3) {
      append_prefixed(p, stage_key("trans", "merge", i), merge_[i].parameters());
      append_prefixed(p, stage_key("cnn", "down", i), down_[i].parameters());
    }
    if (i >= 4) {
      append_prefixed(p, stage_key("trans", "expand", i), expand_[i].parameters());
      append_prefixed(p, stage_key("cnn", "up", i), up_[i].parameters());
      append_prefixed(p, stage_key("trans", "skip", i), skip_trans_[i].parameters());
      append_prefixed(p, stage_key("cnn", "skip", i), skip_cnn_[i].parameters());
      append_prefixed(p, stage_key("trans", "fuse", i), fuse_trans_[i].parameters());
      append_prefixed(p, stage_key("cnn", "fuse", i), fuse_cnn_[i].parameters());
    }
    for (std::size_t j = 0; j < blocks_[i].size(); ++j) {
      append_prefixed(p, stage_key("trans", "stage", i) + ".block" + std::to_string(j),
                      blocks_[i][j].parameters());
    }
    append_prefixed(p, stage_key("cnn", "body", i), body_[i].parameters());
  }
  append_prefixed(p, "head.cnn", head_cnn_.parameters());
  append_prefixed(p, "head.trans", head_trans_.parameters());
  append_prefixed(p, "head.tec", head_tec_.parameters());
  return p;
}

std::string TecNet::module_of(const std::string& name) {
  const std::size_t first = name.find('.');
  if (first == std::string::npos) return name;
  const std::size_t second = name.find('.', first + 1);
  return second == std::string::npos ? name : name.substr(0, second);
}

}  // namespace tecnet
