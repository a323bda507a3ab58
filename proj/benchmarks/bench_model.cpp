#include <benchmark/benchmark.h>

#include "tecnet/loss.hpp"
#include "tecnet/model.hpp"

using namespace tecnet;

namespace {

struct NanoFixture {
  TecNet model{TecNetConfig::nano(), 1};
  Tensor image{{1, 64, 64}};
  Tensor label{{1, 64, 64}};

  NanoFixture() {
    Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : image.mutable_values()) v = u(rng);
    for (std::size_t i = 0; i < 64 * 32; ++i) label.mutable_values()[i] = 1.0;
  }
};

void BM_NanoForward(benchmark::State& state) {
  NanoFixture f;
  NoGradScope no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(f.model.forward(f.image).y_tec);
}
BENCHMARK(BM_NanoForward)->Unit(benchmark::kMillisecond);

void BM_NanoForwardBackward(benchmark::State& state) {
  NanoFixture f;
  for (auto _ : state) {
    Tape tape;
    TapeScope scope(tape);
    const TecNetOutput y = f.model.forward(f.image);
    const Tensor loss = total_loss(y.y_tec, y.y_cnn, y.y_trans, f.label, 0.5).total;
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_NanoForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace
