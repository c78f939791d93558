#include "derl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace derl {

namespace {

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

/// Expectation over the grid of one softmax action group.
double group_expectation(std::span<const double> output, int action,
                         const std::vector<double>& grid) {
  const std::size_t n = grid.size();
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e += grid[i] * output[action * n + i];
  }
  return e;
}

}  // namespace

void ReplayBuffer::push(const Transition& t) {
  if (capacity_ == 0) return;
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[head_] = t;
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (data_.empty()) throw Error("replay buffer: cannot sample while empty");
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(data_[rng.uniform_int(data_.size())]);
  }
  return out;
}

void TargetNetworkPair::sync(long step) {
  if (use_polyak) {
    auto& tp = target.params();
    const auto& op = online.params();
    for (std::size_t i = 0; i < tp.size(); ++i) {
      tp[i] = polyak * op[i] + (1.0 - polyak) * tp[i];
    }
    ++sync_events;
  } else if (t_target > 0 && step % t_target == 0) {
    target.params() = online.params();
    ++sync_events;
  }
}

void replay_and_sync(ReplayBuffer& buffer, TargetNetworkPair& pair,
                     long step) {
  (void)buffer;  // buffer push/sample behavior is its own contract
  pair.sync(step);
}

std::vector<double> one_hot(int state, int n_states) {
  std::vector<double> x(n_states, 0.0);
  x.at(state) = 1.0;
  return x;
}

std::vector<double> critic_action_values(const Network& critic, int state,
                                         const std::vector<double>& grid) {
  const std::vector<double> out =
      critic.forward(one_hot(state, critic.input_size()));
  const int n_actions = critic.output_size() / static_cast<int>(grid.size());
  std::vector<double> values(n_actions);
  for (int a = 0; a < n_actions; ++a) {
    values[a] = group_expectation(out, a, grid);
  }
  return values;
}

LossGrad fqi_loss_grad(const Network& net, const Network& target_net,
                       std::span<const Transition> batch,
                       const AgentConfig& cfg) {
  if (batch.empty()) throw Error("fqi: empty batch");
  LossGrad lg;
  lg.grads.assign(net.n_params(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Transition& t : batch) {
    double y = t.reward;
    if (!t.done) {
      const std::vector<double> next =
          target_net.forward(one_hot(t.next_state, target_net.input_size()));
      y += cfg.gamma * next[argmax_lowest(next)];
    }
    Network::Cache cache;
    const std::vector<double> out =
        net.forward(one_hot(t.state, net.input_size()), cache);
    const double diff = out[t.action] - y;
    lg.loss += diff * diff * inv_b;
    std::vector<double> og(out.size(), 0.0);
    og[t.action] = 2.0 * diff * inv_b;
    const std::vector<double> g = net.backward(cache, og);
    for (std::size_t i = 0; i < lg.grads.size(); ++i) lg.grads[i] += g[i];
  }
  return lg;
}

double fqi_update(Network& net, const Network& target_net,
                  std::span<const Transition> batch, AdamState& opt,
                  const AgentConfig& cfg) {
  const LossGrad lg = fqi_loss_grad(net, target_net, batch, cfg);
  adam_step(net.params(), lg.grads, opt);
  return lg.loss;
}

CategoricalDist fzi_categorical_target(const Network& target_net,
                                       const Transition& t,
                                       const AgentConfig& cfg,
                                       const std::vector<double>& grid) {
  if (t.done) {
    return project_categorical(CategoricalDist::point(t.reward), grid);
  }
  const std::vector<double> values =
      critic_action_values(target_net, t.next_state, grid);
  const int a_star = argmax_lowest(values);

  const std::vector<double> out =
      target_net.forward(one_hot(t.next_state, target_net.input_size()));
  std::vector<double> atoms(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    atoms[i] = t.reward + cfg.gamma * grid[i];
  }
  std::vector<double> probs(out.begin() + a_star * grid.size(),
                            out.begin() + (a_star + 1) * grid.size());
  return project_categorical(
      CategoricalDist(std::move(atoms), std::move(probs)), grid);
}

double decomposed_ce_loss(const CategoricalDist& target,
                          const CategoricalDist& predicted, double epsilon) {
  if (!target.same_grid(predicted)) {
    throw AtomMismatchError("decomposed_ce_loss: grids differ");
  }
  const Decomposition dec = decompose_exact(target, epsilon);
  if (dec.clipped) {
    throw ClippedDecompositionError(
        "decomposed_ce_loss: remainder has negative mass for this epsilon");
  }
  const double qm = predicted.probs()[dec.bin];
  if (qm <= 0.0) {
    throw AbsoluteContinuityError(
        "decomposed_ce_loss: predicted mass vanishes at the expectation bin");
  }
  const double alpha = epsilon / (1.0 - epsilon);
  return -std::log(qm) + alpha * cross_entropy(dec.mu, predicted);
}

LossGrad fzi_categorical_loss_grad(const Network& net,
                                   const Network& target_net,
                                   std::span<const Transition> batch,
                                   const AgentConfig& cfg, FziMode mode,
                                   double mix_epsilon) {
  if (batch.empty()) throw Error("fzi: empty batch");
  const std::vector<double> grid = cfg.grid();
  const std::size_t n = grid.size();
  LossGrad lg;
  lg.grads.assign(net.n_params(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const Transition& t : batch) {
    const CategoricalDist target =
        fzi_categorical_target(target_net, t, cfg, grid);
    Network::Cache cache;
    const std::vector<double> out =
        net.forward(one_hot(t.state, net.input_size()), cache);
    const std::size_t base = static_cast<std::size_t>(t.action) * n;

    std::vector<double> og(out.size(), 0.0);
    double sample_loss = 0.0;
    const auto cross_entropy_terms = [&](const std::vector<double>& tp) {
      for (std::size_t i = 0; i < n; ++i) {
        if (tp[i] == 0.0) continue;
        sample_loss -= tp[i] * std::log(out[base + i]);
        og[base + i] -= tp[i] / out[base + i] * inv_b;
      }
    };

    switch (mode) {
      case FziMode::vanilla_ce:
        cross_entropy_terms(target.probs());
        break;
      case FziMode::ablation_mix:
        cross_entropy_terms(mix_with_dirac(target, mix_epsilon).probs());
        break;
      case FziMode::decomposed: {
        const Decomposition dec = decompose_exact(target, mix_epsilon);
        if (dec.clipped) {
          ++lg.clipped_fallbacks;
          cross_entropy_terms(target.probs());
          break;
        }
        const double alpha = mix_epsilon / (1.0 - mix_epsilon);
        sample_loss -= std::log(out[base + dec.bin]);
        og[base + dec.bin] -= 1.0 / out[base + dec.bin] * inv_b;
        for (std::size_t i = 0; i < n; ++i) {
          const double mi = dec.mu.probs()[i];
          if (mi == 0.0) continue;
          sample_loss -= alpha * mi * std::log(out[base + i]);
          og[base + i] -= alpha * mi / out[base + i] * inv_b;
        }
        break;
      }
    }
    lg.loss += sample_loss * inv_b;
    const std::vector<double> g = net.backward(cache, og);
    for (std::size_t i = 0; i < lg.grads.size(); ++i) lg.grads[i] += g[i];
  }
  return lg;
}

FziUpdateResult fzi_categorical_update(Network& net, const Network& target_net,
                                       std::span<const Transition> batch,
                                       AdamState& opt, const AgentConfig& cfg,
                                       FziMode mode, double mix_epsilon) {
  const LossGrad lg =
      fzi_categorical_loss_grad(net, target_net, batch, cfg, mode, mix_epsilon);
  adam_step(net.params(), lg.grads, opt);
  return FziUpdateResult{lg.loss, lg.clipped_fallbacks};
}

std::vector<double> sample_quantile_fractions(int n, Rng& rng) {
  if (n < 1) throw Error("sample_quantile_fractions: n must be >= 1");
  std::vector<double> draws(n);
  for (double& d : draws) {
    do {
      d = rng.uniform();
    } while (d == 0.0);
  }
  std::vector<double> taus(n);
  const double total = std::accumulate(draws.begin(), draws.end(), 0.0);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += draws[i];
    taus[i] = acc / total;
  }
  taus.back() = 1.0;
  return taus;
}

double quantile_huber_kernel(std::span<const double> fractions,
                             std::span<const double> values,
                             std::span<const double> target_samples,
                             double kappa, std::vector<double>* grad_out) {
  if (kappa <= 0.0) throw Error("quantile_huber: kappa must be positive");
  if (fractions.size() != values.size()) {
    throw ShapeMismatchError("quantile_huber: fractions/values mismatch");
  }
  if (grad_out != nullptr) grad_out->assign(values.size(), 0.0);
  const double inv =
      1.0 / (static_cast<double>(fractions.size()) * target_samples.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (const double t : target_samples) {
      const double u = t - values[i];
      const double w = std::abs(fractions[i] - (u < 0.0 ? 1.0 : 0.0));
      const double au = std::abs(u);
      const double huber =
          au <= kappa ? 0.5 * u * u : kappa * (au - 0.5 * kappa);
      loss += w * huber / kappa * inv;
      if (grad_out != nullptr) {
        const double dh = std::clamp(u, -kappa, kappa);
        (*grad_out)[i] -= w * dh / kappa * inv;
      }
    }
  }
  return loss;
}

double quantile_huber_loss(const QuantileDist& predicted,
                           std::span<const double> target_samples,
                           double kappa) {
  return quantile_huber_kernel(predicted.fractions(), predicted.values(),
                               target_samples, kappa, nullptr);
}

LossGrad derac_critic_loss_grad(const Network& net, const Network& target_net,
                                std::span<const Transition> batch,
                                const AgentConfig& cfg, MuMode mu_mode) {
  if (batch.empty()) throw Error("derac_critic: empty batch");
  const double lambda = cfg.lambda;
  if (!(lambda >= 0.0) || !(lambda <= 1.0)) {
    throw Error("derac_critic: lambda must lie in [0,1]");
  }
  const std::vector<double> grid = cfg.grid();
  const std::size_t n = grid.size();
  LossGrad lg;
  lg.grads.assign(net.n_params(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const Transition& t : batch) {
    Network::Cache cache;
    const std::vector<double> out =
        net.forward(one_hot(t.state, net.input_size()), cache);
    const std::size_t base = static_cast<std::size_t>(t.action) * n;
    std::vector<double> og(out.size(), 0.0);

    if (lambda < 1.0) {
      // Scalar TD term on expectations.
      double y = t.reward;
      if (!t.done) {
        const std::vector<double> values =
            critic_action_values(target_net, t.next_state, grid);
        y += cfg.gamma * values[argmax_lowest(values)];
      }
      double pred = 0.0;
      for (std::size_t i = 0; i < n; ++i) pred += grid[i] * out[base + i];
      const double diff = y - pred;
      const double w = (lambda == 0.0) ? 1.0 : 1.0 - lambda;
      lg.loss += w * diff * diff * inv_b;
      for (std::size_t i = 0; i < n; ++i) {
        og[base + i] += w * (-2.0) * diff * grid[i] * inv_b;
      }
    }
    if (lambda > 0.0) {
      // Cross-entropy term against the mu stand-in of the bootstrap target.
      const CategoricalDist target =
          fzi_categorical_target(target_net, t, cfg, grid);
      CategoricalDist mu = target;
      if (mu_mode == MuMode::decompose) {
        const Decomposition dec = decompose_exact(target, cfg.epsilon);
        if (dec.clipped) {
          ++lg.clipped_fallbacks;
        } else {
          mu = dec.mu;
        }
      }
      double ce = 0.0;
      const double w = (lambda == 1.0) ? 1.0 : lambda;
      for (std::size_t i = 0; i < n; ++i) {
        const double mi = mu.probs()[i];
        if (mi == 0.0) continue;
        ce -= mi * std::log(out[base + i]);
        og[base + i] -= w * mi / out[base + i] * inv_b;
      }
      lg.loss += w * ce * inv_b;
    }
    const std::vector<double> g = net.backward(cache, og);
    for (std::size_t i = 0; i < lg.grads.size(); ++i) lg.grads[i] += g[i];
  }
  return lg;
}

double derac_critic_loss(Network& net, const Network& target_net,
                         std::span<const Transition> batch, AdamState& opt,
                         const AgentConfig& cfg, MuMode mu_mode,
                         long* clipped_count) {
  const LossGrad lg =
      derac_critic_loss_grad(net, target_net, batch, cfg, mu_mode);
  if (clipped_count != nullptr) *clipped_count += lg.clipped_fallbacks;
  adam_step(net.params(), lg.grads, opt);
  return lg.loss;
}

LossGrad actor_objective_grad(
    const Network& policy_net,
    const std::vector<std::vector<double>>& action_values,
    std::span<const Transition> batch, double beta) {
  if (batch.size() != action_values.size()) {
    throw ShapeMismatchError("actor_objective: batch/values size mismatch");
  }
  LossGrad lg;
  lg.grads.assign(policy_net.n_params(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Network::Cache cache;
    const std::vector<double> pi = policy_net.forward(
        one_hot(batch[b].state, policy_net.input_size()), cache);
    std::vector<double> og(pi.size(), 0.0);
    for (std::size_t a = 0; a < pi.size(); ++a) {
      double dj = action_values[b][a];
      lg.loss += pi[a] * action_values[b][a] * inv_b;
      if (beta > 0.0 && pi[a] > 0.0) {
        lg.loss -= beta * pi[a] * std::log(pi[a]) * inv_b;
        dj += beta * (-std::log(pi[a]) - 1.0);
      }
      og[a] = dj * inv_b;
    }
    const std::vector<double> g = policy_net.backward(cache, og);
    for (std::size_t i = 0; i < lg.grads.size(); ++i) lg.grads[i] += g[i];
  }
  return lg;
}

double derac_actor_step(Network& policy_net, const Network& critic_net,
                        std::span<const Transition> batch, AdamState& opt,
                        const AgentConfig& cfg) {
  const std::vector<double> grid = cfg.grid();
  std::vector<std::vector<double>> action_values(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    action_values[b] = critic_action_values(critic_net, batch[b].state, grid);
  }
  LossGrad lg = actor_objective_grad(policy_net, action_values, batch, 0.0);
  for (double& g : lg.grads) g = -g;  // ascend
  adam_step(policy_net.params(), lg.grads, opt);
  return lg.loss;
}

namespace {

/// Expected-SARSA critic step for the scalar AC critic.
void ac_scalar_critic_update(Network& critic, const Network& target,
                             const Network& actor,
                             std::span<const Transition> batch,
                             AdamState& opt, const AgentConfig& cfg) {
  std::vector<double> grads(critic.n_params(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Transition& t : batch) {
    double y = t.reward;
    if (!t.done) {
      const std::vector<double> qn =
          target.forward(one_hot(t.next_state, target.input_size()));
      const std::vector<double> pin =
          actor.forward(one_hot(t.next_state, actor.input_size()));
      double v = 0.0;
      for (std::size_t a = 0; a < qn.size(); ++a) v += pin[a] * qn[a];
      y += cfg.gamma * v;
    }
    Network::Cache cache;
    const std::vector<double> out =
        critic.forward(one_hot(t.state, critic.input_size()), cache);
    const double diff = out[t.action] - y;
    std::vector<double> og(out.size(), 0.0);
    og[t.action] = 2.0 * diff * inv_b;
    const std::vector<double> g = critic.backward(cache, og);
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g[i];
  }
  adam_step(critic.params(), grads, opt);
}

/// Quantile-regression critic step for the distributional AC critic.
void ac_quantile_critic_update(Network& critic, const Network& target,
                               const Network& actor,
                               std::span<const Transition> batch,
                               std::span<const double> fractions,
                               AdamState& opt, const AgentConfig& cfg) {
  const int nq = cfg.quantiles;
  std::vector<double> grads(critic.n_params(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Transition& t : batch) {
    std::vector<double> targets;
    if (t.done) {
      targets.assign(1, t.reward);
    } else {
      const std::vector<double> pin =
          actor.forward(one_hot(t.next_state, actor.input_size()));
      const int a_next = argmax_lowest(pin);
      const std::vector<double> zn =
          target.forward(one_hot(t.next_state, target.input_size()));
      targets.resize(nq);
      for (int j = 0; j < nq; ++j) {
        targets[j] = t.reward + cfg.gamma * zn[a_next * nq + j];
      }
    }
    Network::Cache cache;
    const std::vector<double> out =
        critic.forward(one_hot(t.state, critic.input_size()), cache);
    const std::size_t base = static_cast<std::size_t>(t.action) * nq;
    std::vector<double> vgrad;
    quantile_huber_kernel(fractions,
                          std::span<const double>(out.data() + base, nq),
                          targets, cfg.huber_kappa, &vgrad);
    std::vector<double> og(out.size(), 0.0);
    for (int i = 0; i < nq; ++i) og[base + i] = vgrad[i] * inv_b;
    const std::vector<double> g = critic.backward(cache, og);
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g[i];
  }
  adam_step(critic.params(), grads, opt);
}

}  // namespace

AgentRunResult run_agent(const TabularMDP& env, AgentKind kind,
                         const AgentConfig& cfg, FziMode mode,
                         double mix_epsilon, const RunOptions& run,
                         std::uint64_t seed) {
  const int S = env.n_states;
  const int A = env.n_actions;
  const std::vector<double> grid = cfg.grid();

  Rng base(seed);
  Rng env_rng = base.split(0);
  Rng sample_rng = base.split(3);
  Rng frac_rng = base.split(4);

  const bool is_actor = (kind == AgentKind::derac || kind == AgentKind::ac ||
                         kind == AgentKind::ac_ve || kind == AgentKind::ac_re ||
                         kind == AgentKind::ac_re_ve);
  const bool quantile_critic =
      (kind == AgentKind::ac_re || kind == AgentKind::ac_re_ve);
  const bool categorical_critic =
      (kind == AgentKind::fzi_categorical || kind == AgentKind::derac);
  const double beta_eff =
      (kind == AgentKind::ac_ve || kind == AgentKind::ac_re_ve) ? cfg.beta
                                                                : 0.0;

  std::vector<int> sizes{S};
  for (int h : cfg.hidden) sizes.push_back(h);
  if (categorical_critic) {
    sizes.push_back(A * cfg.atoms);
  } else if (quantile_critic) {
    sizes.push_back(A * cfg.quantiles);
  } else {
    sizes.push_back(A);
  }
  const int critic_group = categorical_critic ? cfg.atoms : 0;
  Network critic(sizes, Activation::tanh_fn, critic_group,
                 base.split(1).seed());
  TargetNetworkPair pair(std::move(critic), cfg.t_target, cfg.polyak,
                         cfg.use_polyak);

  std::vector<int> actor_sizes{S};
  for (int h : cfg.hidden) actor_sizes.push_back(h);
  actor_sizes.push_back(A);
  Network actor(actor_sizes, Activation::tanh_fn, A, base.split(2).seed());

  AdamState critic_opt;
  critic_opt.lr = cfg.lr;
  AdamState actor_opt;
  actor_opt.lr = cfg.actor_lr;

  ReplayBuffer buffer(cfg.replay_capacity);
  AgentRunResult result;

  const auto greedy_action = [&](int s) -> int {
    if (is_actor) {
      return argmax_lowest(actor.forward(one_hot(s, S)));
    }
    if (categorical_critic) {
      return argmax_lowest(critic_action_values(pair.online, s, grid));
    }
    return argmax_lowest(pair.online.forward(one_hot(s, S)));
  };

  const auto act = [&](int s) -> int {
    if (is_actor) {
      const std::vector<double> pi = actor.forward(one_hot(s, S));
      return static_cast<int>(env_rng.categorical(pi));
    }
    if (env_rng.uniform() < cfg.explore_eps) {
      return static_cast<int>(env_rng.uniform_int(A));
    }
    return greedy_action(s);
  };

  const auto evaluate = [&](long step) {
    Rng eval_rng = base.split(1000 + static_cast<std::uint64_t>(step));
    std::vector<double> rets(run.eval_episodes, 0.0);
    for (int e = 0; e < run.eval_episodes; ++e) {
      int s = env.start_state;
      double ret = 0.0;
      for (int len = 0; len < cfg.max_episode_len; ++len) {
        const int a = greedy_action(s);
        auto [r, s2, done] = sample_transition(env, s, a, eval_rng);
        ret += r;
        if (done) break;
        s = s2;
      }
      rets[e] = ret;
    }
    double mean = 0.0;
    for (double r : rets) mean += r;
    mean /= run.eval_episodes;
    double var = 0.0;
    for (double r : rets) var += (r - mean) * (r - mean);
    const double sd =
        run.eval_episodes > 1 ? std::sqrt(var / run.eval_episodes) : 0.0;
    result.curve.push_back({step, mean, sd});
  };

  int s = env.start_state;
  double episode_return = 0.0;
  int episode_len = 0;
  for (long step = 1; step <= run.total_steps; ++step) {
    const int a = act(s);
    auto [r, s2, done] = sample_transition(env, s, a, env_rng);
    buffer.push({s, a, r, s2, done});
    episode_return += r;
    ++episode_len;
    if (done || episode_len >= cfg.max_episode_len) {
      result.episode_returns.push_back(
          {step, result.meta.episodes, episode_return});
      ++result.meta.episodes;
      s = env.start_state;
      episode_return = 0.0;
      episode_len = 0;
    } else {
      s = s2;
    }

    if (static_cast<long>(buffer.size()) >= cfg.min_replay) {
      const std::vector<Transition> batch =
          buffer.sample(cfg.batch_size, sample_rng);
      switch (kind) {
        case AgentKind::fqi:
          fqi_update(pair.online, pair.target, batch, critic_opt, cfg);
          break;
        case AgentKind::fzi_categorical: {
          const FziUpdateResult u = fzi_categorical_update(
              pair.online, pair.target, batch, critic_opt, cfg, mode,
              mix_epsilon);
          result.meta.clipped_fallbacks += u.clipped_fallbacks;
          break;
        }
        case AgentKind::derac:
          derac_critic_loss(pair.online, pair.target, batch, critic_opt, cfg,
                            MuMode::decompose, &result.meta.clipped_fallbacks);
          derac_actor_step(actor, pair.online, batch, actor_opt, cfg);
          break;
        case AgentKind::ac:
        case AgentKind::ac_ve:
        case AgentKind::ac_re:
        case AgentKind::ac_re_ve: {
          std::vector<std::vector<double>> action_values(batch.size());
          if (quantile_critic) {
            const std::vector<double> fractions =
                sample_quantile_fractions(cfg.quantiles, frac_rng);
            ac_quantile_critic_update(pair.online, pair.target, actor, batch,
                                      fractions, critic_opt, cfg);
            for (std::size_t b = 0; b < batch.size(); ++b) {
              const std::vector<double> out =
                  pair.online.forward(one_hot(batch[b].state, S));
              action_values[b].resize(A);
              for (int ai = 0; ai < A; ++ai) {
                double m = 0.0;
                for (int j = 0; j < cfg.quantiles; ++j) {
                  m += out[ai * cfg.quantiles + j];
                }
                action_values[b][ai] = m / cfg.quantiles;
              }
            }
          } else {
            ac_scalar_critic_update(pair.online, pair.target, actor, batch,
                                    critic_opt, cfg);
            for (std::size_t b = 0; b < batch.size(); ++b) {
              action_values[b] =
                  pair.online.forward(one_hot(batch[b].state, S));
            }
          }
          LossGrad lg =
              actor_objective_grad(actor, action_values, batch, beta_eff);
          for (double& g : lg.grads) g = -g;  // ascend
          adam_step(actor.params(), lg.grads, actor_opt);
          break;
        }
      }
    }
    replay_and_sync(buffer, pair, step);
    result.meta.sync_events = pair.sync_events;

    if (run.eval_every > 0 && step % run.eval_every == 0) evaluate(step);
  }

  result.greedy_actions.resize(S);
  result.final_action_probs.resize(S);
  for (int st = 0; st < S; ++st) {
    result.greedy_actions[st] = greedy_action(st);
    if (is_actor) {
      result.final_action_probs[st] = actor.forward(one_hot(st, S));
    } else {
      result.final_action_probs[st] = one_hot(result.greedy_actions[st], A);
    }
  }
  return result;
}

std::vector<EpisodeReturn> ac_variant_run(const TabularMDP& env,
                                          AcVariant variant,
                                          const AgentConfig& cfg,
                                          std::uint64_t seed,
                                          const RunOptions& run,
                                          AgentRunResult* full) {
  AgentKind kind = AgentKind::ac;
  switch (variant) {
    case AcVariant::ac: kind = AgentKind::ac; break;
    case AcVariant::ac_ve: kind = AgentKind::ac_ve; break;
    case AcVariant::ac_re: kind = AgentKind::ac_re; break;
    case AcVariant::ac_re_ve: kind = AgentKind::ac_re_ve; break;
  }
  AgentRunResult res =
      run_agent(env, kind, cfg, FziMode::vanilla_ce, 1.0, run, seed);
  std::vector<EpisodeReturn> returns = res.episode_returns;
  if (full != nullptr) *full = std::move(res);
  return returns;
}

std::string episode_returns_to_csv(std::span<const EpisodeReturn> returns,
                                   std::uint64_t seed,
                                   const std::string& variant) {
  std::string out = "step,episode,return,seed,variant\n";
  char buf[160];
  for (const EpisodeReturn& e : returns) {
    std::snprintf(buf, sizeof(buf), "%ld,%ld,%.12g,%llu,%s\n", e.step,
                  e.episode, e.ret, static_cast<unsigned long long>(seed),
                  variant.c_str());
    out += buf;
  }
  return out;
}

}  // namespace derl
