#include "tecnet/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tecnet/errors.hpp"
#include "tecnet/mac_counter.hpp"

namespace tecnet {

namespace {

std::size_t heads_for(std::size_t projected, std::size_t heads) {
  return projected % heads == 0 && projected >= 2 * heads ? heads : 1;
}

// Relative bias gather indices for a [heads x n x n] view of a
// [(2T-1)^2 x heads] table.
std::vector<std::size_t> per_head_index(std::size_t window, std::size_t table,
                                        std::size_t heads) {
  const std::vector<std::size_t> rel = relative_position_index(window, table);
  std::vector<std::size_t> idx(heads * rel.size());
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < rel.size(); ++i) idx[h * rel.size() + i] = rel[i] * heads + h;
  }
  return idx;
}

// Window layout [nw x c x m x m] <-> branch token layout [nw x N x F].
Tensor to_branch_tokens(AcamBranch b, const Tensor& w) {
  const std::size_t nw = w.dim(0), c = w.dim(1), m = w.dim(2);
  switch (b) {
    case AcamBranch::spatial:
      return permute(reshape(w, {nw, c, m * m}), {0, 2, 1});
    case AcamBranch::channel:
      return reshape(w, {nw, c, m * m});
    case AcamBranch::channel_height:
      return reshape(w, {nw, c * m, m});
    case AcamBranch::channel_width:
      return reshape(permute(w, {0, 1, 3, 2}), {nw, c * m, m});
  }
  throw UsageError("unknown attention branch");
}

Tensor from_branch_tokens(AcamBranch b, const Tensor& t, std::size_t c, std::size_t m) {
  const std::size_t nw = t.dim(0);
  switch (b) {
    case AcamBranch::spatial:
      return reshape(permute(t, {0, 2, 1}), {nw, c, m, m});
    case AcamBranch::channel:
    case AcamBranch::channel_height:
      return reshape(t, {nw, c, m, m});
    case AcamBranch::channel_width:
      return permute(reshape(t, {nw, c, m, m}), {0, 1, 3, 2});
  }
  throw UsageError("unknown attention branch");
}

Tensor apply_tokens(const LinearLayer& layer, const Tensor& t) {
  const std::size_t nw = t.dim(0), n = t.dim(1);
  Tensor y = layer.forward(reshape(t, {nw * n, t.dim(2)}));
  return reshape(y, {nw, n, layer.out_features()});
}

Tensor pad_grid(const Tensor& x, const WindowPlan& plan) {
  const std::size_t ph = plan.padded_h - x.dim(1), pw = plan.padded_w - x.dim(2);
  if (ph == 0 && pw == 0) return x;
  return pad2d(x, 0, ph, 0, pw);
}

Tensor crop_grid(const Tensor& x, std::size_t h, std::size_t w) {
  Tensor y = x;
  if (y.dim(1) != h) y = slice(y, 1, 0, h);
  if (y.dim(2) != w) y = slice(y, 2, 0, w);
  return y;
}

void require_grid(const Tensor& x, std::size_t c, std::size_t h, std::size_t w) {
  if (x.ndim() != 3 || x.dim(0) != c || x.dim(1) != h || x.dim(2) != w) {
    throw DimensionError("window attention configured for " + shape_string({c, h, w}) +
                         ", got " + shape_string(x.shape()));
  }
}

}  // namespace

std::size_t compact_dim(std::size_t d) { return std::max<std::size_t>(1, d / 8); }

const char* branch_name(AcamBranch b) {
  switch (b) {
    case AcamBranch::spatial:
      return "spatial";
    case AcamBranch::channel:
      return "channel";
    case AcamBranch::channel_height:
      return "channel_height";
    case AcamBranch::channel_width:
      return "channel_width";
  }
  return "?";
}

Tensor branch_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& bias,
                        const Tensor& mask, std::size_t heads, double scale_factor,
                        Tensor* probs) {
  if (q.ndim() != 3 || q.shape() != k.shape() || q.shape() != v.shape()) {
    throw DimensionError("branch_attention: q " + shape_string(q.shape()) + ", k " +
                         shape_string(k.shape()) + ", v " + shape_string(v.shape()));
  }
  const std::size_t b = q.dim(0), n = q.dim(1), d = q.dim(2);
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("branch_attention: " + std::to_string(heads) +
                      " heads do not divide projected width " + std::to_string(d));
  }
  const std::size_t dh = d / heads;
  auto split = [&](const Tensor& t) {
    if (heads == 1) return t;
    return reshape(permute(reshape(t, {b, n, heads, dh}), {0, 2, 1, 3}), {b * heads, n, dh});
  };
  Tensor scores = scale(batched_matmul(split(q), split(k), true), scale_factor);
  scores = reshape(scores, {b, heads, n, n});
  if (bias.defined()) scores = add(scores, bias);
  if (mask.defined()) {
    if (mask.shape() != Shape{b, n, n}) {
      throw DimensionError("branch_attention: mask " + shape_string(mask.shape()));
    }
    std::vector<double> expanded(b * heads * n * n);
    auto mv = mask.values();
    for (std::size_t w = 0; w < b; ++w) {
      for (std::size_t h = 0; h < heads; ++h) {
        std::copy_n(mv.data() + w * n * n, n * n, expanded.data() + (w * heads + h) * n * n);
      }
    }
    scores = add(scores, Tensor({b, heads, n, n}, std::move(expanded)));
  }
  Tensor p = softmax(scores, 3);
  if (probs != nullptr) *probs = p;
  Tensor out = batched_matmul(reshape(p, {b * heads, n, n}), split(v));
  if (heads == 1) return reshape(out, {b, n, d});
  return reshape(permute(reshape(out, {b, heads, n, dh}), {0, 2, 1, 3}), {b, n, d});
}

// ACAM ----------------------------------------------------------------------

std::uint64_t AcamMacReport::total() const {
  std::uint64_t t = projection;
  for (std::uint64_t a : attention) t += a;
  return t;
}

std::uint64_t AcamMacReport::formula_total() const {
  std::uint64_t t = formula_projection;
  for (std::uint64_t a : formula_attention) t += a;
  return t;
}

namespace {

std::array<BranchGeometry, kAcamBranches> acam_geometry(const AcamOptions& o,
                                                        const WindowPlan& plan) {
  const std::size_t m = plan.window, n = m * m, c = o.channels;
  std::array<BranchGeometry, kAcamBranches> g{};
  if (o.shared_kv) {
    const std::size_t d = compact_dim(c);
    g[0] = {n, d, d, o.heads};
    g[1] = {d, n, n, heads_for(n, o.heads)};
    g[2] = {d * m, m, m, heads_for(m, o.heads)};
  } else {
    g[0] = {n, c, compact_dim(c), o.heads};
    g[1] = {c, n, compact_dim(n), heads_for(compact_dim(n), o.heads)};
    g[2] = {c * m, m, compact_dim(m), heads_for(compact_dim(m), o.heads)};
  }
  g[3] = g[2];
  if (o.branches[0] && g[0].projected % o.heads != 0) {
    throw ConfigError("spatial attention width " + std::to_string(g[0].projected) +
                      " is not divisible by " + std::to_string(o.heads) + " heads (channels " +
                      std::to_string(c) + ")");
  }
  return g;
}

void validate(const AcamOptions& o) {
  if (o.channels == 0 || o.heads == 0 || o.window == 0 || o.grid_h == 0 || o.grid_w == 0) {
    throw ConfigError("attention options must be positive");
  }
}

}  // namespace

AcamLayer::AcamLayer(const AcamOptions& o, Rng& rng) : options_(o) {
  validate(o);
  plan_ = plan_windows(o.grid_h, o.grid_w, o.window, o.shifted);
  geometry_ = acam_geometry(o, plan_);
  const std::size_t span = 2 * o.window - 1;
  if (o.shared_kv) {
    const std::size_t d = compact_dim(o.channels);
    shared_k_ = LinearLayer(o.channels, d, true, rng);
    shared_v_ = LinearLayer(o.channels, d, true, rng);
    shared_out_ = LinearLayer(d, o.channels, true, rng);
    shared_out_.zero();
    if (o.branches[1]) channel_bias_ = constant_parameter({d, d}, 0.0);
  } else {
    for (std::size_t b = 0; b < kAcamBranches; ++b) {
      if (!o.branches[b]) continue;
      const BranchGeometry& g = geometry_[b];
      branch_[b].q = LinearLayer(g.features, g.projected, true, rng);
      branch_[b].k = LinearLayer(g.features, g.projected, true, rng);
      branch_[b].v = LinearLayer(g.features, g.projected, true, rng);
      branch_[b].out = LinearLayer(g.projected, g.features, true, rng);
      branch_[b].out.zero();
    }
    if (o.branches[1]) channel_bias_ = constant_parameter({o.channels, o.channels}, 0.0);
  }
  if (o.branches[0]) {
    spatial_bias_ = constant_parameter({span * span, o.heads}, 0.0);
    relative_index_ = per_head_index(plan_.window, o.window, o.heads);
  }
  lambda_ = constant_parameter({kAcamBranches}, 0.25);
  if (plan_.shift > 0) mask_ = shift_mask(plan_.padded_h, plan_.padded_w, plan_.window, plan_.shift);
}

Tensor AcamLayer::bias_for(AcamBranch b) const {
  const std::size_t n = plan_.window * plan_.window;
  if (b == AcamBranch::spatial) return gather(spatial_bias_, relative_index_, {options_.heads, n, n});
  if (b == AcamBranch::channel) return channel_bias_;
  return {};
}

Tensor AcamLayer::branch_forward(AcamBranch b, const Tensor& windows, const Tensor& mask,
                                 AcamTrace* trace) const {
  const std::size_t i = static_cast<std::size_t>(b);
  const BranchGeometry& g = geometry_[i];
  const BranchParams& p = branch_[i];
  Tensor tokens = to_branch_tokens(b, windows);
  Tensor q, k, v;
  {
    MacLabel label("projection");
    q = apply_tokens(p.q, tokens);
    k = apply_tokens(p.k, tokens);
    v = apply_tokens(p.v, tokens);
  }
  Tensor attended;
  {
    MacLabel label(branch_name(b));
    Tensor* probs = trace != nullptr && b == AcamBranch::spatial ? &trace->spatial_probs : nullptr;
    attended = branch_attention(q, k, v, bias_for(b), b == AcamBranch::spatial ? mask : Tensor(),
                                g.heads, 1.0 / std::sqrt(static_cast<double>(g.projected)), probs);
  }
  Tensor out;
  {
    MacLabel label("projection");
    out = apply_tokens(p.out, attended);
  }
  return from_branch_tokens(b, out, options_.channels, plan_.window);
}

Tensor AcamLayer::shared_forward(const Tensor& windows, const Tensor& mask,
                                 AcamTrace* trace) const {
  const std::size_t nw = windows.dim(0), c = options_.channels, m = plan_.window, n = m * m;
  const std::size_t d = compact_dim(c);
  Tensor pixels = reshape(permute(reshape(windows, {nw, c, n}), {0, 2, 1}), {nw * n, c});
  Tensor ek, ev;
  {
    MacLabel label("projection");
    ek = shared_k_.forward(pixels);
    ev = shared_v_.forward(pixels);
  }
  auto embed_map = [&](const Tensor& e) {
    return reshape(permute(reshape(e, {nw, n, d}), {0, 2, 1}), {nw, d, m, m});
  };
  const Tensor kmap = embed_map(ek), vmap = embed_map(ev);
  std::vector<Tensor> outs;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < kAcamBranches; ++i) {
    if (!options_.branches[i]) continue;
    const AcamBranch b = static_cast<AcamBranch>(i);
    const BranchGeometry& g = geometry_[i];
    Tensor kt = to_branch_tokens(b, kmap), vt = to_branch_tokens(b, vmap);
    Tensor attended;
    {
      MacLabel label(branch_name(b));
      Tensor* probs = trace != nullptr && i == 0 ? &trace->spatial_probs : nullptr;
      attended = branch_attention(kt, kt, vt, bias_for(b), i == 0 ? mask : Tensor(), g.heads,
                                  1.0 / std::sqrt(static_cast<double>(g.projected)), probs);
    }
    outs.push_back(from_branch_tokens(b, attended, d, m));
    if (trace != nullptr) trace->branch_outputs[i] = outs.back();
    active.push_back(i);
  }
  Tensor lambda = active.size() == kAcamBranches ? lambda_ : gather(lambda_, active, {active.size()});
  Tensor fused = weighted_sum(outs, lambda);
  Tensor tokens = reshape(permute(reshape(fused, {nw, d, n}), {0, 2, 1}), {nw * n, d});
  Tensor y;
  {
    MacLabel label("projection");
    y = shared_out_.forward(tokens);
  }
  return reshape(permute(reshape(y, {nw, n, c}), {0, 2, 1}), {nw, c, m, m});
}

Tensor AcamLayer::forward(const Tensor& x, AcamTrace* trace) const {
  require_grid(x, options_.channels, options_.grid_h, options_.grid_w);
  bool any = false;
  for (bool on : options_.branches) any = any || on;
  if (!any) return Tensor(x.shape());

  Tensor t = cyclic_shift(pad_grid(x, plan_), plan_.shift);
  Tensor windows = window_partition(t, plan_.window);
  Tensor fused;
  if (options_.shared_kv) {
    fused = shared_forward(windows, mask_, trace);
  } else {
    std::vector<Tensor> outs;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < kAcamBranches; ++i) {
      if (!options_.branches[i]) continue;
      outs.push_back(branch_forward(static_cast<AcamBranch>(i), windows, mask_, trace));
      if (trace != nullptr) trace->branch_outputs[i] = outs.back();
      active.push_back(i);
    }
    Tensor lambda =
        active.size() == kAcamBranches ? lambda_ : gather(lambda_, active, {active.size()});
    fused = weighted_sum(outs, lambda);
  }
  t = window_reverse(fused, plan_.padded_h, plan_.padded_w);
  return crop_grid(cyclic_unshift(t, plan_.shift), options_.grid_h, options_.grid_w);
}

ParameterList AcamLayer::parameters() const {
  ParameterList p;
  if (options_.shared_kv) {
    append_prefixed(p, "k", shared_k_.parameters());
    append_prefixed(p, "v", shared_v_.parameters());
    append_prefixed(p, "out", shared_out_.parameters());
  } else {
    for (std::size_t i = 0; i < kAcamBranches; ++i) {
      if (!options_.branches[i]) continue;
      const std::string name = branch_name(static_cast<AcamBranch>(i));
      append_prefixed(p, name + ".q", branch_[i].q.parameters());
      append_prefixed(p, name + ".k", branch_[i].k.parameters());
      append_prefixed(p, name + ".v", branch_[i].v.parameters());
      append_prefixed(p, name + ".out", branch_[i].out.parameters());
    }
  }
  if (spatial_bias_.defined()) p.push_back({"spatial.relative_bias", spatial_bias_});
  if (channel_bias_.defined()) p.push_back({"channel.bias_table", channel_bias_});
  p.push_back({"lambda", lambda_});
  return p;
}

void AcamLayer::zero_outputs() {
  if (options_.shared_kv) {
    shared_out_.zero();
    return;
  }
  for (auto& b : branch_) {
    if (b.out.weight().defined()) b.out.zero();
  }
}

AcamMacReport AcamLayer::count_actual_macs(const AcamOptions& o) {
  validate(o);
  const WindowPlan plan = plan_windows(o.grid_h, o.grid_w, o.window, o.shifted);
  const auto geometry = acam_geometry(o, plan);
  AcamMacReport r;
  const std::uint64_t nw = plan.windows();
  const std::uint64_t c = o.channels;
  bool any = false;
  for (std::size_t i = 0; i < kAcamBranches; ++i) {
    if (!o.branches[i]) continue;
    any = true;
    const BranchGeometry& g = geometry[i];
    const std::uint64_t n = g.tokens, f = g.features, d = g.projected;
    r.attention[i] = nw * 2 * n * n * d;
    if (!o.shared_kv) r.projection += nw * 4 * n * f * d;
  }
  if (o.shared_kv && any) {
    const std::uint64_t n = plan.window * plan.window, d = compact_dim(o.channels);
    r.projection = nw * n * 3 * c * d;
  }
  const std::uint64_t hw = static_cast<std::uint64_t>(o.grid_h) * o.grid_w;
  const std::uint64_t m2 = static_cast<std::uint64_t>(o.window) * o.window;
  r.formula_projection = hw * c * c / 4;
  for (std::size_t i = 0; i < kAcamBranches; ++i) r.formula_attention[i] = m2 * hw * c / 4;
  return r;
}

std::size_t AcamLayer::parameter_count(const AcamOptions& o) {
  validate(o);
  const WindowPlan plan = plan_windows(o.grid_h, o.grid_w, o.window, o.shifted);
  const auto geometry = acam_geometry(o, plan);
  const std::size_t span = 2 * o.window - 1;
  std::size_t total = kAcamBranches;  // lambda
  if (o.shared_kv) {
    const std::size_t d = compact_dim(o.channels);
    total += 2 * LinearLayer::parameter_count(o.channels, d, true) +
             LinearLayer::parameter_count(d, o.channels, true);
    if (o.branches[1]) total += d * d;
  } else {
    for (std::size_t i = 0; i < kAcamBranches; ++i) {
      if (!o.branches[i]) continue;
      const BranchGeometry& g = geometry[i];
      total += 3 * LinearLayer::parameter_count(g.features, g.projected, true) +
               LinearLayer::parameter_count(g.projected, g.features, true);
    }
    if (o.branches[1]) total += o.channels * o.channels;
  }
  if (o.branches[0]) total += span * span * o.heads;
  return total;
}

// Plain window attention ------------------------------------------------------

WindowMsaLayer::WindowMsaLayer(const WindowMsaOptions& o, Rng& rng) : options_(o) {
  if (o.channels == 0 || o.heads == 0 || o.channels % o.heads != 0) {
    throw ConfigError("window attention: " + std::to_string(o.heads) +
                      " heads do not divide " + std::to_string(o.channels) + " channels");
  }
  plan_ = plan_windows(o.grid_h, o.grid_w, o.window, o.shifted);
  qkv_ = LinearLayer(o.channels, 3 * o.channels, true, rng);
  proj_ = LinearLayer(o.channels, o.channels, true, rng);
  proj_.zero();
  const std::size_t span = 2 * o.window - 1;
  bias_table_ = constant_parameter({span * span, o.heads}, 0.0);
  relative_index_ = per_head_index(plan_.window, o.window, o.heads);
  if (plan_.shift > 0) mask_ = shift_mask(plan_.padded_h, plan_.padded_w, plan_.window, plan_.shift);
}

Tensor WindowMsaLayer::forward(const Tensor& x) const {
  const std::size_t c = options_.channels, m = plan_.window, n = m * m;
  require_grid(x, c, options_.grid_h, options_.grid_w);
  Tensor t = cyclic_shift(pad_grid(x, plan_), plan_.shift);
  Tensor windows = window_partition(t, m);
  const std::size_t nw = windows.dim(0);
  Tensor tokens = reshape(permute(reshape(windows, {nw, c, n}), {0, 2, 1}), {nw * n, c});
  Tensor qkv = qkv_.forward(tokens);
  auto part = [&](std::size_t i) { return reshape(slice(qkv, 1, i * c, c), {nw, n, c}); };
  Tensor bias = gather(bias_table_, relative_index_, {options_.heads, n, n});
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(c / options_.heads));
  Tensor attended = branch_attention(part(0), part(1), part(2), bias, mask_, options_.heads,
                                     scale_factor);
  Tensor y = proj_.forward(reshape(attended, {nw * n, c}));
  Tensor back = reshape(permute(reshape(y, {nw, n, c}), {0, 2, 1}), {nw, c, m, m});
  t = window_reverse(back, plan_.padded_h, plan_.padded_w);
  return crop_grid(cyclic_unshift(t, plan_.shift), options_.grid_h, options_.grid_w);
}

ParameterList WindowMsaLayer::parameters() const {
  ParameterList p;
  append_prefixed(p, "qkv", qkv_.parameters());
  append_prefixed(p, "proj", proj_.parameters());
  p.push_back({"relative_bias", bias_table_});
  return p;
}

std::uint64_t WindowMsaLayer::mac_count(const WindowMsaOptions& o) {
  const WindowPlan plan = plan_windows(o.grid_h, o.grid_w, o.window, o.shifted);
  const std::uint64_t nw = plan.windows(), n = plan.window * plan.window, c = o.channels;
  return nw * (4 * n * c * c + 2 * n * n * c);
}

std::size_t WindowMsaLayer::parameter_count(const WindowMsaOptions& o) {
  const std::size_t span = 2 * o.window - 1;
  return LinearLayer::parameter_count(o.channels, 3 * o.channels, true) +
         LinearLayer::parameter_count(o.channels, o.channels, true) + span * span * o.heads;
}

}  // namespace tecnet
