#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tecnet/layers.hpp"
#include "tecnet/ops.hpp"
#include "tecnet/parameters.hpp"
#include "tecnet/window.hpp"

namespace tecnet {

/// Feature width of the compact projection: d / 8, but at least 1.
std::size_t compact_dim(std::size_t d);

/// Multi-head scaled dot-product attention over a batch of token sets.
///
/// q, k, v are [B x N x d]; heads split d evenly. Scores are scaled by
/// `scale`, then `bias` ([heads x N x N] or [N x N], may be undefined) and
/// `mask` ([B x N x N], may be undefined, shared by all heads) are added
/// before the row softmax. Returns [B x N x d]; when `probs` is non-null it
/// receives the post-softmax weights [B x heads x N x N].
Tensor branch_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& bias,
                        const Tensor& mask, std::size_t heads, double scale,
                        Tensor* probs = nullptr);

enum class AcamBranch : std::size_t { spatial = 0, channel = 1, channel_height = 2, channel_width = 3 };
inline constexpr std::size_t kAcamBranches = 4;
const char* branch_name(AcamBranch b);

struct AcamOptions {
  std::size_t channels = 8;
  std::size_t heads = 1;
  std::size_t window = 4;
  /// Token grid the layer attends over; fixes the effective window.
  std::size_t grid_h = 4;
  std::size_t grid_w = 4;
  bool shifted = false;
  /// Project K and V once per pixel and share them across the branches
  /// (Q reuses the K embedding), instead of per-branch Q/K/V maps.
  bool shared_kv = false;
  std::array<bool, kAcamBranches> branches{true, true, true, true};
};

/// Geometry of one branch: how many tokens a window yields, the width of
/// each token, and the attention width after projection.
struct BranchGeometry {
  std::size_t tokens = 0;
  std::size_t features = 0;
  std::size_t projected = 0;
  std::size_t heads = 1;
};

/// Multiply-accumulate report of one forward pass.
struct AcamMacReport {
  std::uint64_t projection = 0;
  std::array<std::uint64_t, kAcamBranches> attention{};
  /// Reference values from the closed-form complexity of the module on the
  /// unpadded grid: projection hwC^2/4, each branch M^2hwC/4.
  std::uint64_t formula_projection = 0;
  std::array<std::uint64_t, kAcamBranches> formula_attention{};

  std::uint64_t total() const;
  std::uint64_t formula_total() const;
};

/// Intermediate values exposed for inspection.
struct AcamTrace {
  /// Post-softmax spatial weights [nw x heads x M^2 x M^2].
  Tensor spatial_probs;
  /// Per-branch outputs in window layout [nw x C x M x M]; undefined when disabled.
  std::array<Tensor, kAcamBranches> branch_outputs;
};

/// Adaptive complementary window attention.
///
/// Each window is attended four ways: over its M^2 pixels (with relative
/// position bias and the shift mask), over its C channels (with a learned
/// C x C bias), over the C*M (channel, row) pairs and over the C*M
/// (channel, column) pairs. Each branch projects its token features down by
/// 8x before attention and back up afterwards; the branch outputs are mixed
/// by four learned scalars.
class AcamLayer {
 public:
  AcamLayer() = default;
  AcamLayer(const AcamOptions& options, Rng& rng);

  /// x [C x h x w] with (h, w) equal to the configured grid.
  Tensor forward(const Tensor& x, AcamTrace* trace = nullptr) const;

  const AcamOptions& options() const { return options_; }
  const WindowPlan& plan() const { return plan_; }
  const BranchGeometry& geometry(AcamBranch b) const {
    return geometry_[static_cast<std::size_t>(b)];
  }

  ParameterList parameters() const;
  /// Sets every output projection to zero, making the layer output zero.
  void zero_outputs();

  Tensor& lambda() { return lambda_; }
  Tensor& spatial_bias_table() { return spatial_bias_; }
  Tensor& channel_bias() { return channel_bias_; }

  /// Multiply-accumulates executed by forward(), per branch, next to the
  /// closed-form reference values.
  AcamMacReport count_actual_macs() const { return count_actual_macs(options_); }
  static AcamMacReport count_actual_macs(const AcamOptions& o);
  static std::size_t parameter_count(const AcamOptions& o);

 private:
  struct BranchParams {
    LinearLayer q, k, v, out;
  };

  Tensor branch_forward(AcamBranch b, const Tensor& windows, const Tensor& mask,
                        AcamTrace* trace) const;
  Tensor shared_forward(const Tensor& windows, const Tensor& mask, AcamTrace* trace) const;
  Tensor bias_for(AcamBranch b) const;

  AcamOptions options_;
  WindowPlan plan_;
  std::array<BranchGeometry, kAcamBranches> geometry_{};
  std::array<BranchParams, kAcamBranches> branch_{};
  // shared_kv mode
  LinearLayer shared_k_, shared_v_, shared_out_;
  Tensor spatial_bias_;  // [(2M-1)^2 x heads]
  Tensor channel_bias_;  // [C x C], or [d x d] in shared_kv mode
  Tensor lambda_;        // [4]
  Tensor mask_;          // shift mask, undefined when unshifted
  std::vector<std::size_t> relative_index_;
};

struct WindowMsaOptions {
  std::size_t channels = 8;
  std::size_t heads = 1;
  std::size_t window = 4;
  std::size_t grid_h = 4;
  std::size_t grid_w = 4;
  bool shifted = false;
};

/// Plain (shifted-)window multi-head self-attention over pixels, used when the
/// complementary branches are switched off.
class WindowMsaLayer {
 public:
  WindowMsaLayer() = default;
  WindowMsaLayer(const WindowMsaOptions& options, Rng& rng);

  Tensor forward(const Tensor& x) const;
  ParameterList parameters() const;
  void zero_outputs() { proj_.zero(); }
  const WindowPlan& plan() const { return plan_; }

  std::uint64_t mac_count() const { return mac_count(options_); }
  static std::uint64_t mac_count(const WindowMsaOptions& o);
  static std::size_t parameter_count(const WindowMsaOptions& o);

 private:
  WindowMsaOptions options_;
  WindowPlan plan_;
  LinearLayer qkv_, proj_;
  Tensor bias_table_;
  Tensor mask_;
  std::vector<std::size_t> relative_index_;
};

}  // namespace tecnet
