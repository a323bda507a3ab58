#include <doctest.h>

#include <cmath>
#include <sstream>

#include "check_util.hpp"
#include "oracles.hpp"
#include "tecnet/errors.hpp"
#include "tecnet/grad_check.hpp"
#include "tecnet/mac_counter.hpp"
#include "tecnet/ops.hpp"
#include "tecnet/tensor_io.hpp"

using namespace tecnet;
using tecnet::testing::random_tensor;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul examples") {
  const Tensor a({2, 2}, {1, 2, 3, 4}), b({2, 2}, {5, 6, 7, 8});
  const Tensor c = matmul(a, b);
  CHECK(c[0] == 19);
  CHECK(c[1] == 22);
  CHECK(c[2] == 43);
  CHECK(c[3] == 50);

  Rng rng(1);
  const Tensor x = random_tensor({3, 4}, rng);
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.mutable_values()[i * 4] = 1.0;
  CHECK(max_abs_diff(matmul(eye, x), x) == 0.0);
  const Tensor z = matmul(Tensor::zeros({2, 3}), random_tensor({3, 4}, rng));
  CHECK(z.shape() == Shape{2, 4});
  for (double v : z.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST_CASE("softmax examples") {
  const Tensor eq = softmax(Tensor({4}, {2, 2, 2, 2}), 0);
  for (double v : eq.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  const Tensor p = softmax(Tensor({2}, {10, 0}), 0);
  const double oracle = std::exp(10.0) / (std::exp(10.0) + 1.0);
  CHECK(std::abs(p[0] - oracle) < 1e-15);
  CHECK(std::abs(p[0] - 0.9999546) < 1e-7);
  CHECK(std::abs(p[1] - 0.0000454) < 1e-7);

  Rng rng(2);
  const Tensor x = random_tensor({5, 7}, rng, -4, 4);
  const Tensor s = softmax(x, 1), shifted = softmax(add_scalar(x, 123.0), 1);
  CHECK(max_abs_diff(s, shifted) <= 1e-12);
  for (std::size_t r = 0; r < 5; ++r) {
    double acc = 0;
    for (std::size_t c = 0; c < 7; ++c) acc += s[r * 7 + c];
    CHECK(std::abs(acc - 1.0) < 1e-9);
  }
}

TEST_CASE("conv2d examples and nested-loop oracle") {
  Rng rng(3);
  const Tensor x = random_tensor({1, 5, 5}, rng);
  const Tensor one({1, 1, 1, 1}, {1.0});
  CHECK(max_abs_diff(conv2d(x, one, Tensor()), x) == 0.0);

  const Tensor ones = Tensor::full({1, 3, 3}, 1.0), k = Tensor::full({1, 1, 3, 3}, 1.0);
  const Tensor y = conv2d(ones, k, Tensor(), {1, 1});
  CHECK(y[4] == 9.0);
  CHECK(y[0] == 4.0);

  CHECK(max_abs_diff(conv2d(x, random_tensor({1, 1, 3, 3}, rng), Tensor(), {1, 1}),
                     conv2d(x, random_tensor({1, 1, 3, 3}, rng), Tensor(), {1, 1})) > 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t cin = 1 + trial % 8, cout = 1 + (trial * 3) % 5;
    const std::size_t stride = 1 + trial % 2, pad = trial % 3 == 0 ? 0 : 1, k = trial % 4 == 0 ? 1 : 3;
    const std::size_t hw = 16 - (trial % 2);
    const Tensor xi = random_tensor({cin, hw, hw}, rng), w = random_tensor({cout, cin, k, k}, rng);
    const Tensor b = random_tensor({cout}, rng);
    if ((hw + 2 * pad - k) % stride != 0) {
      CHECK_THROWS_AS(conv2d(xi, w, b, {stride, pad}), ConfigError);
      continue;
    }
    const Tensor got = conv2d(xi, w, b, {stride, pad});
    const Tensor want = testing::naive_conv2d(xi, w, b, stride, pad);
    // Same summation order is not guaranteed; the products match to rounding.
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("conv2d on a single channel matches the oracle exactly") {
  Rng rng(31);
  const Tensor x = random_tensor({1, 5, 5}, rng), w = random_tensor({1, 1, 3, 3}, rng);
  CHECK(max_abs_diff(conv2d(x, w, Tensor(), {1, 1}), testing::naive_conv2d(x, w, Tensor(), 1, 1)) ==
        0.0);
}

TEST_CASE("bilinear_sample examples") {
  const Tensor x({1, 2, 2}, {0, 1, 2, 3});
  CHECK(bilinear_sample(x, Tensor({1}, {1}), Tensor({1}, {0}))[0] == 2.0);
  CHECK(bilinear_sample(x, Tensor({1}, {0}), Tensor({1}, {0.5}))[0] == 0.5);
  CHECK(bilinear_sample(x, Tensor({1}, {-5}), Tensor({1}, {-5}))[0] == 0.0);
}

TEST_CASE("layernorm examples") {
  const Tensor g = Tensor::full({4}, 1.0), b = Tensor::zeros({4});
  const Tensor flat = layernorm(Tensor::full({1, 4}, 3.0), g, b);
  for (double v : flat.values()) CHECK(v == 0.0);
  const Tensor pm = layernorm(Tensor({1, 2}, {1, -1}), Tensor::full({2}, 1.0), Tensor::zeros({2}));
  CHECK(pm[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(pm[1] == doctest::Approx(-1.0).epsilon(1e-4));

  Rng rng(4);
  const Tensor y = layernorm(random_tensor({1, 64}, rng, -3, 5), Tensor::full({64}, 1.0),
                             Tensor::zeros({64}));
  double mean = 0, var = 0;
  for (double v : y.values()) mean += v / 64.0;
  for (double v : y.values()) var += (v - mean) * (v - mean) / 64.0;
  CHECK(std::abs(mean) < 1e-7);
  CHECK(std::abs(var - 1.0) < 1e-4);
}

TEST_CASE("backward examples") {
  Tensor w({2}, {1, 2});
  w.set_requires_grad(true);
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum(mul(w, w)));
  }
  CHECK(w.grad()[0] == 2.0);
  CHECK(w.grad()[1] == 4.0);

  Tensor u({2}, {1, 2});
  u.set_requires_grad(true);
  Tensor other({2}, {3, 4});
  other.set_requires_grad(true);
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum(mul(other, other)));
  }
  CHECK(u.grad()[0] == 0.0);
  CHECK(u.grad()[1] == 0.0);
}

TEST_CASE("no tape records under NoGradScope") {
  Tensor w({2}, {1, 2});
  w.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  {
    NoGradScope off;
    (void)mul(w, w);
  }
  CHECK(tape.size() == 0);
  (void)mul(w, w);
  CHECK(tape.size() == 1);
}

TEST_CASE("grad_check examples") {
  Rng rng(5);
  const auto sq = grad_check([](const Tensor& x) { return sum(mul(x, x)); },
                             random_tensor({6}, rng), 1e-4, 1e-8);
  CHECK(sq.max_rel_error < 1e-8);

  const Tensor w = random_tensor({4, 3}, rng);
  const auto chain = grad_check(
      [&](const Tensor& x) { return sum(mul(softmax(matmul(x, w), 1), Tensor::full({2, 3}, 0.7))); },
      random_tensor({2, 4}, rng), 1e-4, 1e-6);
  CHECK(chain.max_rel_error < 1e-6);

  // Negative control: an op whose backward rule is off by a factor of two.
  auto wrong_square = [](const Tensor& x) {
    Tensor y(x.shape());
    auto yv = y.mutable_values();
    for (std::size_t i = 0; i < x.numel(); ++i) yv[i] = x[i] * x[i];
    record_op(y, {x}, [xi = Tensor(x), yi = y.impl()]() mutable {
      auto g = xi.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 4.0 * xi[i] * yi->grad[i];
    });
    return sum(y);
  };
  const auto bad = grad_check(wrong_square, random_tensor({5}, rng, 0.5, 1.0), 1e-4, 1e-4);
  CHECK_FALSE(bad.passed);
  CHECK(bad.max_rel_error > 1e-4);
}

TEST_CASE("every primitive passes central finite differences") {
  for (const auto& c : testing::primitive_gradient_checks()) {
    INFO(c.name, " worst ", c.report.worst_tensor, "[", c.report.worst_index, "] ad ",
         c.report.worst_autodiff, " fd ", c.report.worst_numeric);
    CHECK(c.report.checked > 0);
    CHECK(c.report.max_rel_error < 1e-4);
  }
}

TEST_CASE("permute and reshape round trips are exact") {
  Rng rng(6);
  const Tensor x = random_tensor({2, 3, 4, 5}, rng);
  const Tensor p = permute(permute(x, {3, 1, 0, 2}), {2, 1, 3, 0});
  CHECK(max_abs_diff(p, x) == 0.0);
  CHECK(max_abs_diff(reshape(reshape(x, {6, 20}), {2, 3, 4, 5}), x) == 0.0);
  CHECK_THROWS_AS(reshape(x, {7, 7}), DimensionError);
}

TEST_CASE("forward outputs stay finite on finite inputs") {
  Rng rng(7);
  const Tensor x = random_tensor({3, 8}, rng, -50, 50);
  for (const Tensor& y : {softmax(x, 1), gelu(x), sigmoid(x), layernorm(x, Tensor::full({8}, 1.0),
                                                                         Tensor::zeros({8}))}) {
    for (double v : y.values()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("mac counter attributes products to labels") {
  Rng rng(8);
  MacCounter counter;
  {
    MacLabel a("outer");
    (void)matmul(random_tensor({2, 3}, rng), random_tensor({3, 4}, rng));
    MacLabel b("inner");
    (void)conv2d(random_tensor({16, 8, 8}, rng), random_tensor({16, 16, 3, 3}, rng), Tensor(), {1, 1});
  }
  CHECK(counter.by_label().at("outer") == 24);
  CHECK(counter.by_label().at("outer/inner") == 147456);
  CHECK(counter.total_under("outer") == 24 + 147456);
  {
    MacLabel sibling("outer_b");
    (void)matmul(random_tensor({1, 2}, rng), random_tensor({2, 1}, rng));
  }
  CHECK(counter.total_under("outer") == 24 + 147456);
  CHECK(counter.total_under("outer_b") == 2);
}

TEST_CASE("tensor records round trip through f32") {
  Rng rng(9);
  const Tensor x = random_tensor({2, 3, 4}, rng);
  std::stringstream ss;
  write_tensor(ss, x);
  CHECK(ss.str().size() == tensor_record_size(x.shape()));
  CHECK(ss.str().substr(0, 4) == "TECT");
  const Tensor y = read_tensor(ss);
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == double(float(x[i])));
  std::stringstream bad("TECX");
  CHECK_THROWS_AS(read_tensor(bad), IoError);
}

}  // TEST_SUITE
