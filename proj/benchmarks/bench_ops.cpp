#include <benchmark/benchmark.h>

#include "tecnet/attention.hpp"
#include "tecnet/ddconv.hpp"
#include "tecnet/ops.hpp"

using namespace tecnet;

namespace {

Tensor random_input(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.mutable_values()) v = u(rng);
  return t;
}

void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor x = random_input({c, hw, hw}, rng), w = random_input({c, c, 3, 3}, rng);
  const Tensor b = Tensor::zeros({c});
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, {1, 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 9 * hw * hw));
}
BENCHMARK(BM_Conv2d)->Args({16, 16})->Args({32, 8})->Args({64, 16});

void BM_DeformConv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  const Tensor x = random_input({c, hw, hw}, rng), w = random_input({c, c, 3, 3}, rng);
  Tensor off = random_input({18, hw, hw}, rng);
  const Tensor b = Tensor::zeros({c});
  for (auto _ : state) benchmark::DoNotOptimize(deform_conv2d(x, off, w, b, {1, 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 9 * hw * hw));
}
BENCHMARK(BM_DeformConv2d)->Args({16, 16})->Args({32, 8})->Args({64, 16});

void BM_DDConvLayer(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  DDConvOptions o;
  o.in_channels = o.out_channels = c;
  const DDConvLayer layer(o, rng);
  const Tensor x = random_input({c, 16, 16}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x));
}
BENCHMARK(BM_DDConvLayer)->Arg(16)->Arg(32);

void BM_AcamForward(benchmark::State& state) {
  const auto grid = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  AcamOptions o;
  o.channels = 32;
  o.heads = 2;
  o.window = 4;
  o.grid_h = o.grid_w = grid;
  o.shifted = state.range(1) != 0;
  const AcamLayer layer(o, rng);
  const Tensor x = random_input({32, grid, grid}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x));
}
BENCHMARK(BM_AcamForward)->Args({8, 0})->Args({16, 0})->Args({16, 1});

}  // namespace
