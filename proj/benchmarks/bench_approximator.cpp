#include <benchmark/benchmark.h>

#include "derl/agents.hpp"
#include "derl/approximator.hpp"

namespace {

void BM_ForwardBackward(benchmark::State& state) {
  derl::Network net({8, 32, 102}, derl::Activation::tanh_fn, 51, 1);
  const std::vector<double> x = derl::one_hot(3, 8);
  std::vector<double> og(102, 0.01);
  for (auto _ : state) {
    derl::Network::Cache cache;
    benchmark::DoNotOptimize(net.forward(x, cache));
    benchmark::DoNotOptimize(net.backward(cache, og));
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_AdamStep(benchmark::State& state) {
  derl::Network net({8, 32, 102}, derl::Activation::tanh_fn, 51, 1);
  std::vector<double> grads(net.n_params(), 1e-3);
  derl::AdamState opt;
  for (auto _ : state) {
    derl::adam_step(net.params(), grads, opt);
  }
}
BENCHMARK(BM_AdamStep);

void BM_FziUpdate(benchmark::State& state) {
  const derl::TabularMDP env = derl::make_risky_chain(5, 0.1, 0.9, 1.0);
  derl::AgentConfig cfg;
  cfg.gamma = env.gamma;
  auto [lo, hi] = env.return_bounds();
  cfg.support_lo = lo;
  cfg.support_hi = hi;
  cfg.atoms = 51;
  cfg.hidden = {16};
  derl::Rng rng(7);
  std::vector<derl::Transition> batch;
  int s = env.start_state;
  while (batch.size() < 32) {
    const int a = static_cast<int>(rng.uniform_int(env.n_actions));
    auto [r, s2, done] = derl::sample_transition(env, s, a, rng);
    batch.push_back({s, a, r, s2, done});
    s = done ? env.start_state : s2;
  }
  derl::Network net({env.n_states, 16, env.n_actions * cfg.atoms},
                    derl::Activation::tanh_fn, cfg.atoms, 3);
  const derl::Network target = net;
  derl::AdamState opt;
  for (auto _ : state) {
    benchmark::DoNotOptimize(derl::fzi_categorical_update(
        net, target, batch, opt, cfg, derl::FziMode::decomposed, 0.6));
  }
}
BENCHMARK(BM_FziUpdate);

}  // namespace

BENCHMARK_MAIN();
