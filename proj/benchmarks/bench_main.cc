// Copyright 2026 The adfd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <cmath>
#include <string>
#include <vector>

#include "adfd/audio.h"
#include "adfd/nn.h"
#include "adfd/rng.h"
#include "adfd/scoring.h"
#include "adfd/spectral.h"

namespace adfd {
namespace {

Segment NoiseSegment() {
  Rng rng(1);
  Segment s;
  s.utt_id = "bench";
  s.samples.resize(kSegmentSamples);
  for (float& v : s.samples) v = static_cast<float>(0.2 * rng.Gaussian());
  return s;
}

void BM_ExtractFeatures(benchmark::State& state) {
  const std::string name(RecipeNames()[static_cast<std::size_t>(state.range(0))]);
  const SpectralConfig config = RecipeConfig(name);
  const Segment seg = NoiseSegment();
  state.SetLabel(name);
  for (auto _ : state) benchmark::DoNotOptimize(ExtractFeatures(seg, config));
}
BENCHMARK(BM_ExtractFeatures)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

void BM_StftPower(benchmark::State& state) {
  const Segment seg = NoiseSegment();
  for (auto _ : state) benchmark::DoNotOptimize(StftPower(seg));
}
BENCHMARK(BM_StftPower)->Unit(benchmark::kMicrosecond);

Tensor4 RandomBatch(const Architecture& arch, std::size_t n) {
  Rng rng(2);
  Tensor4 x(n, arch.input[0], arch.input[1], arch.input[2]);
  for (float& v : x.data) v = static_cast<float>(rng.Gaussian());
  return x;
}

void BM_CnnForward(benchmark::State& state) {
  const Model model = InitModel("cnn-baseline", 3);
  const Tensor4 x = RandomBatch(model.arch, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Forward(model, x, RunMode::Eval()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CnnForward)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_CnnTrainStep(benchmark::State& state) {
  Model model = InitModel("cnn-baseline", 3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor4 x = RandomBatch(model.arch, n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
  auto adam = AdamState<float>::ForModel(model);
  Rng rng(4);
  for (auto _ : state) {
    const auto lg = LossAndGrads(model, x, labels, RunMode::Train(rng));
    AdamStep(model, lg.grads, adam);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CnnTrainStep)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ComputeEer(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> b(static_cast<std::size_t>(state.range(0))), s(b.size());
  for (double& v : b) v = rng.Uniform(0.2, 1.0);
  for (double& v : s) v = rng.Uniform(0.0, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(ComputeEer(b, s));
}
BENCHMARK(BM_ComputeEer)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace adfd

BENCHMARK_MAIN();
