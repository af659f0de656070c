#include "qavg/inference.hpp"
#include "qavg/mdp.hpp"
#include "qavg/sa.hpp"

#include <benchmark/benchmark.h>

using namespace qavg;

static void BM_SampleGenerative(benchmark::State& state) {
  const auto S = state.range(0);
  auto mdp = random_mdp(S, 3, 0.9, 1, RandomRewards::uniform_noise);
  RandomStream rng(2);
  GenerativeSample sample;
  for (auto _ : state) {
    sample_generative(mdp, rng, sample);
    benchmark::DoNotOptimize(sample.next_state.data());
  }
  state.SetItemsProcessed(state.iterations() * mdp.n_pairs());
}
BENCHMARK(BM_SampleGenerative)->Arg(4)->Arg(32)->Arg(128);

static void BM_QStep(benchmark::State& state) {
  const auto S = state.range(0);
  auto mdp = random_mdp(S, 3, 0.9, 1);
  RandomStream rng(3);
  auto sample = sample_generative(mdp, rng);
  Vector q = Vector::Zero(mdp.n_pairs());
  for (auto _ : state) {
    q_step(mdp, q, sample, 0.1, q);
    benchmark::DoNotOptimize(q.data());
  }
  state.SetItemsProcessed(state.iterations() * mdp.n_pairs());
}
BENCHMARK(BM_QStep)->Arg(4)->Arg(32)->Arg(128);

static void BM_RsUpdate(benchmark::State& state) {
  const auto d = state.range(0);
  const auto mode = state.range(1) ? CovarianceMode::full : CovarianceMode::diagonal;
  RsAccumulator acc(d, mode);
  Vector q = Vector::LinSpaced(d, 0.0, 1.0);
  for (auto _ : state) {
    acc.update(q);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_RsUpdate)->ArgsProduct({{12, 96, 384}, {0, 1}})->ArgNames({"dim", "full"});

static void BM_RunTrajectory(benchmark::State& state) {
  auto mdp = random_mdp(4, 3, 0.6, 0);
  RunConfig cfg{StepSchedule::polynomial(0.51), state.range(0), 1, 0.05};
  cfg.inference = CovarianceMode::diagonal;
  for (auto _ : state) {
    auto run = run_trajectory(mdp, cfg);
    benchmark::DoNotOptimize(run.q_bar.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunTrajectory)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
