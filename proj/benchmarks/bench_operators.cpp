#include <benchmark/benchmark.h>

#include "derl/operators.hpp"

namespace {

void BM_DistributionalBackupProjected(benchmark::State& state) {
  const derl::TabularMDP m = derl::make_cliff_grid(4, 3, -1.0, 0.9);
  auto [lo, hi] = m.return_bounds();
  const std::vector<double> grid =
      derl::make_grid(lo, hi, static_cast<int>(state.range(0)));
  derl::DistTable z(m.n_states, m.n_actions,
                    derl::CategoricalDist::delta(grid, 0));
  const derl::Policy pi = derl::Policy::uniform(m.n_states, m.n_actions);
  for (auto _ : state) {
    benchmark::DoNotOptimize(derl::distributional_backup(m, z, pi, true));
  }
}
BENCHMARK(BM_DistributionalBackupProjected)->Arg(51)->Arg(101);

void BM_PolicyEvaluation(benchmark::State& state) {
  const derl::TabularMDP m = derl::make_cliff_grid(4, 3, -1.0, 0.9);
  const derl::Policy pi = derl::Policy::uniform(m.n_states, m.n_actions);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        derl::policy_evaluation(m, pi, derl::BackupKind::plain, 1e-10));
  }
}
BENCHMARK(BM_PolicyEvaluation);

void BM_Derpi(benchmark::State& state) {
  const derl::TabularMDP m = derl::make_chain(6, 0.1, 0.9);
  derl::DerpiOptions opts;
  opts.lambda = 0.5;
  opts.atoms = static_cast<int>(state.range(0));
  opts.tol = 1e-10;
  for (auto _ : state) {
    benchmark::DoNotOptimize(derl::derpi(m, opts));
  }
}
BENCHMARK(BM_Derpi)->Arg(31)->Arg(51);

}  // namespace

BENCHMARK_MAIN();
