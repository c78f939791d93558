#include <benchmark/benchmark.h>

#include "derl/distributions.hpp"
#include "derl/rng.hpp"
#include "derl/tables.hpp"

namespace {

derl::CategoricalDist random_dist(derl::Rng& rng,
                                  const std::vector<double>& grid) {
  std::vector<double> p(grid.size());
  double total = 0.0;
  for (double& v : p) total += (v = 1e-3 + rng.uniform());
  for (double& v : p) v /= total;
  return derl::CategoricalDist(grid, p);
}

void BM_Projection(benchmark::State& state) {
  derl::Rng rng(1);
  const std::vector<double> grid = derl::make_grid(0.0, 10.0, state.range(0));
  std::vector<double> atoms(64);
  double a = -1.0;
  for (double& z : atoms) z = (a += 0.2 + rng.uniform(0.0, 0.1));
  const derl::CategoricalDist src = random_dist(rng, atoms);
  for (auto _ : state) {
    benchmark::DoNotOptimize(derl::project_categorical(src, grid));
  }
}
BENCHMARK(BM_Projection)->Arg(51)->Arg(201);

void BM_KlDivergence(benchmark::State& state) {
  derl::Rng rng(2);
  const std::vector<double> grid = derl::make_grid(0.0, 10.0, state.range(0));
  const derl::CategoricalDist p = random_dist(rng, grid);
  const derl::CategoricalDist q = random_dist(rng, grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(derl::kl_divergence(p, q));
  }
}
BENCHMARK(BM_KlDivergence)->Arg(51)->Arg(201);

void BM_Wasserstein(benchmark::State& state) {
  derl::Rng rng(3);
  const std::vector<double> ga = derl::make_grid(0.0, 10.0, state.range(0));
  const std::vector<double> gb = derl::make_grid(-1.0, 9.0, state.range(0));
  const derl::CategoricalDist p = random_dist(rng, ga);
  const derl::CategoricalDist q = random_dist(rng, gb);
  for (auto _ : state) {
    benchmark::DoNotOptimize(derl::wasserstein(p, q, 1));
  }
}
BENCHMARK(BM_Wasserstein)->Arg(51)->Arg(201);

void BM_DecomposeExact(benchmark::State& state) {
  derl::Rng rng(4);
  const std::vector<double> grid = derl::make_grid(0.0, 10.0, 51);
  const derl::CategoricalDist p = random_dist(rng, grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(derl::decompose_exact(p, 0.6));
  }
}
BENCHMARK(BM_DecomposeExact);

}  // namespace

BENCHMARK_MAIN();
