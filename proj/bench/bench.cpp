// Serial reference against the OpenMP kernels.
#include <benchmark/benchmark.h>

#include "filtra/bratteli.hpp"
#include "filtra/standardness.hpp"

using namespace filtra;

namespace {

// Multipascal levels carry a weighted l1 metric, so every pair goes through the simplex.
struct LiftFixture {
  CentralChain<double> chain = multinomial_multipascal_chain<double>({0.2, 0.3, 0.5}, -24);
  MetricLadder<double> ladder = intrinsic_metrics(
      *chain.chain, -1, LevelMetric<double>::weighted_l1(chain.graph->vertices(-1), {1.0 / 3, 1.0 / 3, 1.0 / 3}), -16,
      LiftOptions{TransportMethod::automatic, true});
};

const LiftFixture& lift_fixture() {
  static const LiftFixture f;
  return f;
}

void lift(benchmark::State& state, bool parallel) {
  const auto& f = lift_fixture();
  const auto& next = f.ladder.at(-16);
  auto k = f.chain.chain->kernel_from(-17);
  for (auto _ : state) {
    auto rho = lift_metric(next, *k, LiftOptions{TransportMethod::automatic, parallel});
    benchmark::DoNotOptimize(rho);
  }
  state.counters["pairs"] = static_cast<double>(k->sources() * (k->sources() - 1) / 2);
}

void BM_LiftSerial(benchmark::State& state) { lift(state, false); }
void BM_LiftParallel(benchmark::State& state) { lift(state, true); }

void trials(benchmark::State& state, bool parallel) {
  static const auto chain = bernoulli_pascal_chain<double>(0.5, -200);
  static const auto rho = LevelMetric<double>::discrete(chain.graph->vertices(-1));
  static const PWSampler<double> sampler(*chain.chain, -200, 100, -1);
  for (auto _ : state) {
    auto est = pw_monte_carlo(sampler, rho, static_cast<std::size_t>(state.range(0)), 7, parallel);
    benchmark::DoNotOptimize(est);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TrialsSerial(benchmark::State& state) { trials(state, false); }
void BM_TrialsParallel(benchmark::State& state) { trials(state, true); }

}  // namespace

BENCHMARK(BM_LiftSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LiftParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TrialsSerial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsParallel)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
