// benchmarks/domexp-bench.cc

// Copyright 2026  The domexp Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "domexp/config.h"
#include "domexp/experiment.h"
#include "domexp/net.h"
#include "domexp/numkit.h"
#include "domexp/regularizers.h"
#include "domexp/trainer.h"

namespace {

using namespace domexp;

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng &rng) {
  Matrix m(rows, cols);
  for (double &v : m.data()) v = rng.normal();
  return m;
}

void BM_Affine(benchmark::State &state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix x = random_matrix(32, n, rng), w = random_matrix(n, n, rng);
  const std::vector<double> b(n, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(affine(x, w, b));
  state.SetItemsProcessed(state.iterations() * 32 * n * n);
}
BENCHMARK(BM_Affine)->Arg(20)->Arg(64)->Arg(256);

struct DefaultNet {
  NetConfig net{20, {64, 64}, 8};
  Rng rng{2};
  ParamVector params = init(net, rng);
  Dataset data;
  DefaultNet() {
    data.num_classes = 8;
    data.features = random_matrix(32, 20, rng);
    for (int i = 0; i < 32; ++i) data.labels.push_back(i % 8);
  }
};

void BM_ForwardBackward(benchmark::State &state) {
  DefaultNet f;
  for (auto _ : state) benchmark::DoNotOptimize(cross_entropy_loss(f.params, as_batch(f.data)));
}
BENCHMARK(BM_ForwardBackward);

void BM_SkldEwcObjective(benchmark::State &state) {
  DefaultNet f;
  const FisherDiagonal fisher{std::vector<double>(f.params.size(), 0.01), 1.0};
  const SoftTargets soft = precompute_soft_targets(f.params, f.data.features, 2.0);
  RegWeights reg;
  reg.lambda_e = 1.0;
  reg.lambda_s = 0.5;
  reg.temperature = 2.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        hybrid_loss(f.params, f.params, as_batch(f.data), soft.probs, fisher, reg));
}
BENCHMARK(BM_SkldEwcObjective);

void BM_FisherDiagonal(benchmark::State &state) {
  const ExperimentData d = build_datasets(default_config());
  Rng rng(3);
  const ParamVector p = init(d.net, rng);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_fisher_diagonal(p, d.original_train));
  state.SetItemsProcessed(state.iterations() * d.original_train.size());
}
BENCHMARK(BM_FisherDiagonal)->Unit(benchmark::kMillisecond);

void BM_ExpansionEpoch(benchmark::State &state) {
  const ExpansionConfig c = default_config();
  const ExperimentData d = build_datasets(c);
  Rng rng(4);
  const ParamVector theta_o = init(d.net, rng);
  const FisherDiagonal fisher = estimate_fisher_diagonal(theta_o, d.original_train);
  const SoftTargets soft = precompute_soft_targets(theta_o, d.new_train.features, 2.0);
  ExpansionSpec spec;
  spec.method = Method::kSkldEwc;
  spec.weights.lambda_e = 1.0;
  spec.weights.lambda_s = 0.5;
  spec.weights.temperature = 2.0;
  spec.fisher = &fisher;
  spec.soft_targets = &soft;
  TrainConfig cfg = c.expansion_train;
  cfg.fixed_epochs = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(expand_domain(theta_o, d.new_train, spec, cfg, {}));
}
BENCHMARK(BM_ExpansionEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
