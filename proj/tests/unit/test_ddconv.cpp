#include <doctest.h>

#include <cmath>

#include "check_util.hpp"
#include "oracles.hpp"
#include "tecnet/ddconv.hpp"
#include "tecnet/errors.hpp"
#include "tecnet/grad_check.hpp"
#include "tecnet/mac_counter.hpp"
#include "tecnet/ops.hpp"

using namespace tecnet;
using tecnet::testing::random_tensor;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void fill(Tensor t, double v) {
  for (double& e : t.mutable_values()) e = v;
}

void fill_random(Tensor t, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& e : t.mutable_values()) e = u(rng);
}

DDConvOptions opts(std::size_t cin, std::size_t cout, std::size_t n, std::size_t stride = 1) {
  DDConvOptions o;
  o.in_channels = cin;
  o.out_channels = cout;
  o.n_kernels = n;
  o.stride = stride;
  return o;
}

}  // namespace

TEST_SUITE("ddconv") {

TEST_CASE("zero-initialized offset predictor gives an all-zero field") {
  Rng rng(1);
  const DDConvLayer layer(opts(3, 4, 4), rng);
  const OffsetField f = layer.predict_offsets(random_tensor({3, 8, 8}, rng));
  CHECK(f.field.shape() == Shape{18, 8, 8});
  CHECK(f.taps() == 9);
  for (double v : f.field.values()) CHECK(v == 0.0);
}

TEST_CASE("kernel attention examples") {
  Rng rng(2);
  const Tensor x = random_tensor({3, 6, 6}, rng);
  const DDConvLayer single(opts(3, 2, 1), rng);
  CHECK(single.kernel_attention(x)[0] == 1.0);

  DDConvLayer four(opts(3, 2, 4), rng);
  fill(four.attention_weight(), 0.0);
  const Tensor alpha = four.kernel_attention(x);
  for (double a : alpha.values()) CHECK(a == 0.25);

  // Larger temperature on the same logits moves alpha toward uniform.
  DDConvOptions hot = opts(3, 2, 4);
  Rng r1(7), r2(7);
  DDConvLayer cool_layer(opts(3, 2, 4), r1);
  hot.temperature = 30.0;
  DDConvLayer hot_layer(hot, r2);
  fill_random(cool_layer.attention_bias(), rng, -2, 2);
  std::copy(cool_layer.attention_bias().values().begin(), cool_layer.attention_bias().values().end(),
            hot_layer.attention_bias().mutable_values().begin());
  auto spread = [](const Tensor& a) {
    double m = 0;
    for (double v : a.values()) m = std::max(m, std::abs(v - 0.25));
    return m;
  };
  CHECK(spread(hot_layer.kernel_attention(x)) < spread(cool_layer.kernel_attention(x)));
  CHECK(spread(hot_layer.kernel_attention(x)) < 0.05);
}

TEST_CASE("alpha lies on the simplex") {
  Rng rng(3);
  DDConvLayer layer(opts(4, 2, 6), rng);
  fill_random(layer.attention_bias(), rng, -3, 3);
  for (int t = 0; t < 20; ++t) {
    const Tensor a = layer.kernel_attention(random_tensor({4, 5, 5}, rng, -3, 3));
    double s = 0;
    for (double v : a.values()) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("zero offsets with one kernel reproduce conv2d") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const DDConvLayer layer(opts(16, 16, 1), rng);
    fill_random(layer.parameters()[1].tensor, rng, -1, 1);
    const Tensor x = random_tensor({16, 16, 16}, rng);
    const Tensor w = reshape(layer.parameters()[0].tensor, {16, 16, 3, 3});
    const Tensor want = conv2d(x, w, layer.parameters()[1].tensor, {1, 1});
    CHECK(max_abs_diff(layer.forward(x), want) < 1e-9);
  }
}

TEST_CASE("constant input with zero offsets yields sum of the mixed kernel") {
  Rng rng(5);
  DDConvLayer layer(opts(2, 3, 4), rng);
  fill_random(layer.bias(), rng, -1, 1);
  const Tensor x = Tensor::full({2, 7, 7}, 0.8);
  const Tensor w = layer.effective_kernel(layer.kernel_attention(x));
  const Tensor y = layer.forward(x);
  for (std::size_t o = 0; o < 3; ++o) {
    double s = 0;
    for (std::size_t i = 0; i < 18; ++i) s += w[o * 18 + i];
    for (std::size_t r = 1; r < 6; ++r) {
      for (std::size_t c = 1; c < 6; ++c) {
        CHECK(std::abs(y[(o * 7 + r) * 7 + c] - (s * 0.8 + layer.bias()[o])) < 1e-12);
      }
    }
  }
}

TEST_CASE("random offsets match the per-tap bilinear oracle") {
  Rng rng(6);
  for (std::size_t stride : {1, 2}) {
    const std::size_t in = stride == 1 ? 6 : 7;
    const Tensor x = random_tensor({3, in, in}, rng), w = random_tensor({2, 3, 3, 3}, rng);
    const Tensor b = random_tensor({2}, rng);
    const std::size_t pad = stride == 1 ? 1 : 0, out = stride == 1 ? 6 : 3;
    const Tensor off = random_tensor({18, out, out}, rng, -1, 1);
    CHECK(max_abs_diff(deform_conv2d(x, off, w, b, {stride, pad}),
                       testing::naive_deform_conv2d(x, off, w, b, stride, pad)) < 1e-12);
  }
  // Whole layer with a nonzero offset predictor.
  DDConvLayer layer(opts(3, 2, 4), rng);
  fill_random(layer.offset_weight(), rng, -0.2, 0.2);
  fill_random(layer.offset_bias(), rng, -1, 1);
  const Tensor x = random_tensor({3, 6, 6}, rng);
  const Tensor want = testing::naive_deform_conv2d(
      x, layer.predict_offsets(x).field, layer.effective_kernel(layer.kernel_attention(x)),
      layer.bias(), 1, 1);
  CHECK(max_abs_diff(layer.forward(x), want) < 1e-12);
}

TEST_CASE("equal candidate kernels make the output independent of alpha") {
  Rng rng(7);
  DDConvLayer layer(opts(3, 2, 4), rng);
  auto k = layer.kernels().mutable_values();
  const std::size_t per = k.size() / 4;
  for (std::size_t i = per; i < k.size(); ++i) k[i] = k[i % per];
  fill_random(layer.offset_bias(), rng, -0.5, 0.5);
  const Tensor x = random_tensor({3, 6, 6}, rng);
  const Tensor before = layer.forward(x);
  fill_random(layer.attention_weight(), rng, -5, 5);
  CHECK(max_abs_diff(layer.forward(x), before) < 1e-9);
}

TEST_CASE("offset predictor receives gradient when offsets matter") {
  Rng rng(8);
  DDConvLayer layer(opts(2, 2, 2), rng);
  fill(layer.offset_bias(), 0.5);
  const Tensor x = random_tensor({2, 6, 6}, rng);
  GradCheckOptions o;
  const GradCheckReport r = grad_check(
      [&] { return testing::weighted_readout(layer.forward(x), 3); },
      {{"offset.weight", layer.offset_weight()}}, o);
  CHECK(r.passed);
  double norm = 0;
  {
    Tape tape;
    TapeScope scope(tape);
    layer.offset_weight().zero_grad();
    tape.backward(testing::weighted_readout(layer.forward(x), 3));
  }
  for (double g : layer.offset_weight().grad()) norm += std::abs(g);
  CHECK(norm > 1e-3);
}

TEST_CASE("composed layer passes finite differences") {
  for (const auto& c : testing::module_gradient_checks()) {
    if (c.name.rfind("ddconv", 0) != 0) continue;
    INFO(c.name, " worst ", c.report.worst_tensor, "[", c.report.worst_index, "]");
    CHECK(c.report.max_rel_error < 1e-4);
  }
}

TEST_CASE("stride two halves even and odd extents") {
  Rng rng(9);
  const DDConvLayer layer(opts(2, 3, 4, 2), rng);
  CHECK(layer.forward(random_tensor({2, 8, 8}, rng)).shape() == Shape{3, 4, 4});
  CHECK(layer.forward(random_tensor({2, 7, 5}, rng)).shape() == Shape{3, 4, 3});
}

TEST_CASE("sampling set is the regular k x k grid") {
  Rng rng(10);
  const DDConvLayer layer(opts(1, 1, 1), rng);
  const auto s = layer.sampling_set();
  CHECK(s.size() == 9);
  CHECK(s.front() == std::pair{0, 0});
  CHECK(s.back() == std::pair{2, 2});
}

TEST_CASE("closed-form parameter and MAC counts") {
  Rng rng(11);
  for (std::size_t stride : {1, 2}) {
    const DDConvOptions o = opts(5, 7, 4, stride);
    const DDConvLayer layer(o, rng);
    CHECK(count_elements(layer.parameters()) == DDConvLayer::parameter_count(o));
    // n x vanilla kernel + bias + offset conv + coefficient linear
    CHECK(DDConvLayer::parameter_count(o) ==
          4 * 9 * 5 * 7 + 7 + (18 * 5 * 9 + 18) + (5 * 4 + 4));
    MacCounter counter;
    (void)layer.forward(random_tensor({5, 8, 8}, rng));
    CHECK(counter.total() == DDConvLayer::mac_count(o, 8, 8));
  }
}

TEST_CASE("channel mismatch is rejected") {
  Rng rng(12);
  const DDConvLayer layer(opts(3, 3, 2), rng);
  CHECK_THROWS_AS(layer.forward(random_tensor({4, 8, 8}, rng)), ConfigError);
  CHECK_THROWS_AS(DDConvLayer(DDConvOptions{1, 1, 4, 1, 1, 1.0}, rng), ConfigError);
}

}  // TEST_SUITE
