#include <benchmark/benchmark.h>

#include "viewcal/ot.hpp"
#include "viewcal/rng.hpp"

using namespace viewcal;

namespace {

ot::CostMatrix random_cost(Eigen::Index l, std::uint64_t seed) {
  CounterRng rng(seed);
  ot::Matrix c(l, l);
  for (double& x : c.reshaped()) x = rng.uniform();
  return ot::CostMatrix(c);
}

void BM_SolveUot(benchmark::State& state) {
  const Eigen::Index l = state.range(0);
  const ot::CostMatrix cost = random_cost(l, 1);
  const ot::MassVector mu = ot::MassVector::uniform(l);
  ot::UotConfig cfg;
  cfg.eta = 0.01;
  int iterations = 0;
  for (auto _ : state) {
    const auto sol = ot::solve_uot(cost, mu, mu, cfg);
    iterations = sol.iterations;
    benchmark::DoNotOptimize(sol.plan.total());
  }
  state.counters["sweeps"] = iterations;
}
BENCHMARK(BM_SolveUot)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SolveBalanced(benchmark::State& state) {
  const Eigen::Index l = state.range(0);
  const ot::CostMatrix cost = random_cost(l, 2);
  const ot::MassVector mu = ot::MassVector::uniform(l);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ot::solve_balanced(cost, mu, mu, 0.005, 100000, 1e-7).plan.total());
  }
}
BENCHMARK(BM_SolveBalanced)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
