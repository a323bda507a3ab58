#include <doctest.h>

#include <cmath>

#include "check_util.hpp"
#include "tecnet/errors.hpp"
#include "tecnet/layers.hpp"
#include "tecnet/mac_counter.hpp"
#include "tecnet/ops.hpp"
#include "tecnet/transformer_block.hpp"

using namespace tecnet;
using tecnet::testing::random_tensor;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

BlockOptions block_opts(std::size_t c, std::size_t heads, std::size_t grid) {
  BlockOptions o;
  o.channels = c;
  o.heads = heads;
  o.window = 4;
  o.grid_h = o.grid_w = grid;
  return o;
}

}  // namespace

TEST_SUITE("transformer-block") {

TEST_CASE("lpm shape and zero behaviour") {
  Rng rng(1);
  LpmLayer lpm(8, rng);
  CHECK(lpm.forward(random_tensor({16, 8}, rng), 4, 4).shape() == Shape{16, 8});
  testing::perturb(lpm.parameters(), rng, 0.5);
  for (const auto& p : lpm.parameters()) {
    if (p.name.find("bias") == std::string::npos) continue;
    for (double& v : Tensor(p.tensor).mutable_values()) v = 0.0;
  }
  const Tensor y = lpm.forward(Tensor::zeros({16, 8}), 4, 4);
  for (double v : y.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(lpm.forward(Tensor::zeros({15, 8}), 4, 4), UsageError);
}

TEST_CASE("lpm parameter arithmetic") {
  // Expansion stage weights: dense d -> 2d plus a 3x3 depthwise map on 2d channels.
  CHECK(96 * 192 + 192 * 9 == 20160);
  Rng rng(2);
  const LpmLayer lpm(96, rng);
  std::size_t first_stage = 0;
  for (const auto& p : lpm.parameters()) {
    if (p.name == "primary.weight" || p.name == "ghost.weight") first_stage += p.tensor.numel();
  }
  CHECK(first_stage == 20160);
  const MlpLayer mlp(96, rng);
  CHECK(mlp.parameters()[0].tensor.numel() == 36864);
  CHECK(count_elements(lpm.parameters()) == LpmLayer::parameter_count(96));
  CHECK(LpmLayer::parameter_count(96) == 6 * 96 * 96 + 23 * 96);
  CHECK(MlpLayer::parameter_count(96) == 8 * 96 * 96 + 5 * 96);
  for (std::size_t d : {16, 24, 32, 64, 96, 128, 192, 256, 384, 512, 768, 1024}) {
    CHECK(LpmLayer::parameter_count(d) < MlpLayer::parameter_count(d));
  }
}

TEST_CASE("zeroed output maps make the block pair the identity") {
  Rng rng(3);
  for (bool acam : {true, false}) {
    for (bool lpm : {true, false}) {
      BlockOptions o = block_opts(16, 2, 8);
      o.use_acam = acam;
      o.use_lpm = lpm;
      BlockPair pair(o, rng);
      const Tensor x = random_tensor({64, 16}, rng);
      CHECK(max_abs_diff(pair.forward(x), x) == 0.0);
      testing::perturb(pair.parameters(), rng, 0.2);
      pair.zero_outputs();
      CHECK(max_abs_diff(pair.forward(x), x) == 0.0);
    }
  }
}

TEST_CASE("shape is preserved and residuals matter") {
  Rng rng(4);
  for (std::size_t grid : {4, 8, 10}) {
    BlockPair pair(block_opts(16, 2, grid), rng);
    testing::perturb(pair.parameters(), rng, 0.2);
    const Tensor x = random_tensor({grid * grid, 16}, rng);
    const Tensor y = pair.forward(x);
    CHECK(y.shape() == x.shape());
    CHECK(max_abs_diff(y, x) > 0.0);
  }
  BlockOptions o = block_opts(16, 2, 8);
  TransformerBlock block(o, rng);
  testing::perturb(block.parameters(), rng, 0.2);
  const Tensor x = random_tensor({64, 16}, rng);
  const Tensor attended = to_tokens(block.acam().forward(from_tokens(block.norm1().forward(x), 8, 8)));
  const Tensor no_residual = block.lpm().forward(block.norm2().forward(attended), 8, 8);
  CHECK(max_abs_diff(block.forward(x), no_residual) > 1e-3);
}

TEST_CASE("block pair gradients reach every sublayer") {
  for (const auto& c : testing::module_gradient_checks()) {
    if (c.name != "lpm" && c.name != "block_pair") continue;
    INFO(c.name, " worst ", c.report.worst_tensor, "[", c.report.worst_index, "]");
    CHECK(c.report.max_rel_error < 1e-4);
  }
  Rng rng(5);
  BlockPair pair(block_opts(16, 2, 8), rng);
  testing::perturb(pair.parameters(), rng, 0.2);
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(testing::weighted_readout(pair.forward(random_tensor({64, 16}, rng)), 2));
  }
  for (const auto& p : pair.parameters()) {
    double norm = 0;
    for (double g : p.tensor.grad()) norm += std::abs(g);
    INFO(p.name);
    CHECK(norm > 0.0);
  }
}

TEST_CASE("block counts match enumeration and instrumented forward") {
  Rng rng(6);
  for (bool acam : {true, false}) {
    for (bool lpm : {true, false}) {
      for (bool shifted : {false, true}) {
        BlockOptions o = block_opts(32, 4, 8);
        o.use_acam = acam;
        o.use_lpm = lpm;
        o.shifted = shifted;
        const TransformerBlock block(o, rng);
        CHECK(count_elements(block.parameters()) == TransformerBlock::parameter_count(o));
        MacCounter counter;
        (void)block.forward(random_tensor({64, 32}, rng));
        CHECK(counter.total() == block.mac_count());
        const std::uint64_t ffn = lpm ? 64 * (6 * 32 * 32 + 18 * 32) : 64 * 8 * 32 * 32;
        CHECK(counter.total_under("ffn") == ffn);
      }
    }
  }
}

}  // TEST_SUITE
