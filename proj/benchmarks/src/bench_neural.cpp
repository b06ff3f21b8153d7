#include <benchmark/benchmark.h>

#include <vector>

#include "tomsyn/dataset.hpp"
#include "tomsyn/neural/layers.hpp"
#include "tomsyn/neural/tensor_ops.hpp"
#include "tomsyn/observer.hpp"
#include "tomsyn/random.hpp"

namespace {

using namespace tomsyn;

void fill_random(std::vector<float>& v, Rng& rng) {
  for (float& x : v) x = static_cast<float>(rng.next_double() * 2.0 - 1.0);
}

void BM_GemmNN(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int k = 180;  // 3x3 x 20 channels, the first-layer im2col width
  const int n = 32;
  Rng rng(7);
  std::vector<float> a(static_cast<std::size_t>(m) * k);
  std::vector<float> b(static_cast<std::size_t>(k) * n);
  std::vector<float> c(static_cast<std::size_t>(m) * n);
  fill_random(a, rng);
  fill_random(b, rng);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0f);
    neural::gemm_nn(a.data(), b.data(), c.data(), m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * m * k * n);
}
BENCHMARK(BM_GemmNN)->Arg(121)->Arg(121 * 32);

void BM_Im2col(benchmark::State& state) {
  const int n = 32;
  const int c = 32;
  Rng rng(7);
  std::vector<float> x(static_cast<std::size_t>(n) * 121 * c);
  std::vector<float> col(static_cast<std::size_t>(n) * 121 * 9 * c);
  fill_random(x, rng);
  for (auto _ : state) {
    neural::im2col3x3(x.data(), col.data(), n, 11, 11, c);
    benchmark::DoNotOptimize(col.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Im2col);

void BM_ConvForward(benchmark::State& state) {
  const int n = 32;
  neural::Conv2d<float> conv("bench.conv", 3, 32, 32);
  Rng rng(7);
  conv.init(rng);
  std::vector<float> x(static_cast<std::size_t>(n) * 121 * 32);
  std::vector<float> y(static_cast<std::size_t>(n) * 121 * 32);
  fill_random(x, rng);
  for (auto _ : state) {
    conv.forward(x.data(), y.data(), n, 11, 11);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ConvForward);

void BM_BatchNormForward(benchmark::State& state) {
  const int n = 32;
  neural::BatchNorm<float> bn("bench.bn", 32);
  Rng rng(7);
  std::vector<float> x(static_cast<std::size_t>(n) * 121 * 32);
  std::vector<float> y(x.size());
  fill_random(x, rng);
  const auto mode = state.range(0) == 0 ? neural::Mode::Train
                                        : neural::Mode::Eval;
  for (auto _ : state) {
    bn.forward(x.data(), y.data(), n, 121, mode);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_BatchNormForward)->Arg(0)->Arg(1);

void BM_ModelForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ObserverModel<float> model(Variant::Beliefs, 11);
  Rng rng(3);
  std::vector<float> x(static_cast<std::size_t>(n) * kInputSize);
  fill_random(x, rng);
  for (auto _ : state) {
    model.forward(x.data(), n, neural::Mode::Eval);
    benchmark::DoNotOptimize(model.target_logits().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ModelForward)->Arg(1)->Arg(32)->Arg(256);

void BM_ModelTrainStep(benchmark::State& state) {
  const int n = 32;
  ObserverModel<float> model(Variant::Beliefs, 11);
  Rng rng(3);
  std::vector<float> x(static_cast<std::size_t>(n) * kInputSize);
  fill_random(x, rng);
  std::vector<std::int32_t> target(n), action(n), next_state(n);
  std::vector<float> belief(static_cast<std::size_t>(n) * kCellCount,
                            1.0f / kCellCount);
  for (int i = 0; i < n; ++i) {
    target[i] = static_cast<std::int32_t>(rng.next_below(kCellCount));
    action[i] = static_cast<std::int32_t>(rng.next_below(kActionCount));
    next_state[i] = static_cast<std::int32_t>(rng.next_below(kCellCount));
  }
  LossWeights w;
  for (auto _ : state) {
    model.forward(x.data(), n, neural::Mode::Train);
    model.compute_loss(target.data(), action.data(), next_state.data(),
                       belief.data(), w, /*with_grads=*/true);
    model.backward(x.data(), n);
    model.zero_grads();
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ModelTrainStep);

}  // namespace

BENCHMARK_MAIN();
