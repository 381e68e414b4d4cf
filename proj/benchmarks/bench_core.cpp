// Copyright (C) 2026 The pald Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "pald/flow/flow_model.hpp"
#include "pald/flow/ode.hpp"
#include "pald/metrics/metrics.hpp"
#include "pald/numerics/graph.hpp"
#include "pald/numerics/layers.hpp"
#include "pald/stats/stats.hpp"
#include "pald/trf/trf.hpp"

namespace {

using namespace pald;

RowMatrix randn(Eigen::Index r, Eigen::Index c, Rng& rng) {
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_MlpBackward(benchmark::State& state) {
  const auto width = std::size_t(state.range(0));
  Rng rng(1);
  const Mlp mlp = Mlp::make("m", 64, {width, width}, 8);
  ParameterSet params;
  mlp.init(params, rng);
  const Tensor x = Tensor::from_matrix(randn(64, 64, rng));
  for (auto _ : state) {
    Graph g;
    BoundParameters p(g, params);
    auto grads = g.backward(ops::sum_squares(mlp.forward(p, g.constant(x))));
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_MlpBackward)->Arg(64)->Arg(128);

flow::FlowModel small_flow() {
  flow::FlowConfig cfg;
  cfg.latent_dim = 8;
  return flow::FlowModel::create(cfg, 3);
}

void BM_LogDensity(benchmark::State& state) {
  const auto model = small_flow();
  Rng rng(2);
  const RowMatrix ctx = randn(256, Eigen::Index(model.config.context_hidden), rng);
  const flow::ConditionalField field(model, ctx);
  const RowMatrix x = randn(256, 8, rng);
  const flow::DivergenceSpec spec{state.range(0) ? flow::DivergenceMode::kHutchinson : flow::DivergenceMode::kExact, 1};
  for (auto _ : state) benchmark::DoNotOptimize(flow::log_density(field, x, 0.5, 10, spec, &rng));
  state.SetLabel(state.range(0) ? "hutchinson" : "exact");
}
BENCHMARK(BM_LogDensity)->Arg(0)->Arg(1);

void BM_Psd(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> x(std::size_t(state.range(0)));
  for (auto& v : x) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(metrics::psd(x, 1024));
}
BENCHMARK(BM_Psd)->Arg(1 << 14)->Arg(1 << 18);

void BM_NestedCv(benchmark::State& state) {
  Rng rng(5);
  const auto lags = trf::make_lags({}, 64.0);
  std::vector<trf::TrialStats> trials;
  for (int t = 0; t < int(state.range(0)); ++t) {
    std::vector<std::vector<double>> preds(2, std::vector<double>(600));
    for (auto& p : preds)
      for (auto& v : p) v = rng.normal();
    const RowMatrix x = trf::lagged_design(preds, lags);
    trials.push_back(trf::trial_stats(x, randn(600, 8, rng)));
  }
  const std::vector<bool> keep(2 * lags.size(), true);
  for (auto _ : state) benchmark::DoNotOptimize(trf::nested_cv(trials, keep, {}));
}
BENCHMARK(BM_NestedCv)->Arg(6)->Arg(18)->Unit(benchmark::kMillisecond);

void BM_AndersonDarling(benchmark::State& state) {
  Rng rng(6);
  std::vector<double> x(std::size_t(state.range(0)));
  for (auto& v : x) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(stats::anderson_darling_normality(x));
}
BENCHMARK(BM_AndersonDarling)->Arg(20)->Arg(10000);

}  // namespace

// The packaged benchmark_main archive is LTO-only and tied to one compiler build.
BENCHMARK_MAIN();
