// Copyright 2026 The StereoScore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "stereoscore/dataset.h"
#include "stereoscore/harness.h"
#include "stereoscore/metrics.h"
#include "stereoscore/model.h"
#include "stereoscore/ops.h"

namespace stereoscore {
namespace {

Tensor Uniform(Shape shape, std::uint64_t seed, float lo, float hi, bool grad) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> v(NumElements(shape));
  for (float& x : v) x = u(rng);
  return Tensor::FromVector(shape, std::move(v), grad);
}

// Forward and backward of one 3x3 conv at the widest trunk layer.
void BM_Conv2dTrunk(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Tensor x = Uniform({n, 128, 8, 8}, 1, 0, 1, true);
  const Tensor w = Uniform({128, 128, 3, 3}, 2, -0.03f, 0.03f, true);
  const Tensor b = Uniform({128}, 3, 0, 0, true);
  for (auto _ : state) {
    const Tensor y = Conv2d(x, w, b, 1, 1);
    Backward(Sum(y));
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Conv2dTrunk)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_NetworkForward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const MultiScoreNet net = MultiScoreNet::Build(1);
  const Tensor left = Uniform({n, 3, 32, 32}, 4, 0, 255, false);
  const Tensor right = Uniform({n, 3, 32, 32}, 5, 0, 255, false);
  NoGradGuard no_grad;
  for (auto _ : state) {
    const ScoreBatch s = net.Forward(left, right);
    benchmark::DoNotOptimize(s.global.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_NetworkForward)->Arg(1)->Arg(128)->Unit(benchmark::kMillisecond);

// One full training step: forward, loss, backward, SGD update.
void BM_TrainStep(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  MultiScoreNet net = MultiScoreNet::Build(1);
  const Tensor left = Uniform({n, 3, 32, 32}, 6, 0, 255, false);
  const Tensor right = Uniform({n, 3, 32, 32}, 7, 0, 255, false);
  const std::vector<PatchLabels> labels(n, PatchLabels{60, 40, 45});
  const SgdConfig sgd;
  for (auto _ : state) {
    net.ZeroGrad();
    Backward(MultiscoreLoss(net.Forward(left, right), labels, AblationMode::kFull));
    SgdStep(net.parameters(), sgd);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TrainStep)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Srocc(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = g(rng);
    b[i] = a[i] + g(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(Srocc(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Srocc)->Arg(1000)->Arg(100000);

void BM_TilePatches(benchmark::State& state) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(0, 255);
  StereoSample s;
  s.left = RgbImage(1920, 1080);
  s.right = RgbImage(1920, 1080);
  for (auto& p : s.left.pixels) p = static_cast<std::uint8_t>(u(rng));
  s.right.pixels = s.left.pixels;
  for (auto _ : state) {
    const PatchBatch batch = TilePatches(s);
    benchmark::DoNotOptimize(batch.left.data().data());
  }
}
BENCHMARK(BM_TilePatches)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace stereoscore
BENCHMARK_MAIN();
