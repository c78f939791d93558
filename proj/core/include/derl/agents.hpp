#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "derl/approximator.hpp"
#include "derl/distributions.hpp"
#include "derl/mdp.hpp"
#include "derl/operators.hpp"

namespace derl {

/// Learning hyperparameters. Defaults follow the standard sheet: Adam at
/// 3e-4, discount 0.99, batch 256, 51 atoms, 32 quantile fractions, Huber
/// threshold 1, polyak 5e-3; replay capacity is the desk-scale 1e5.
struct AgentConfig {
  double epsilon = 0.5;      // decomposition proportion
  double lambda = 0.5;       // critic interpolation weight
  double beta = 0.2;         // vanilla-entropy temperature
  double gamma = 0.99;
  int atoms = 51;
  double support_lo = 0.0;
  double support_hi = 1.0;
  int quantiles = 32;
  double huber_kappa = 1.0;
  double lr = 3e-4;          // value/critic network learning rate
  double actor_lr = 3e-4;
  int batch_size = 256;
  long t_target = 100;
  double polyak = 5e-3;
  bool use_polyak = false;
  std::size_t replay_capacity = 100000;
  long min_replay = 200;
  double explore_eps = 0.1;
  std::vector<int> hidden = {32};
  int max_episode_len = 200;

  /// alpha = eps/(1-eps), maintained from epsilon.
  double alpha() const { return epsilon / (1.0 - epsilon); }
  std::vector<double> grid() const {
    return make_grid(support_lo, support_hi, atoms);
  }
};

/// Replay records are the same (s, a, r, s', done) tuples trajectories are
/// made of.
using Transition = Step;

/// Fixed-capacity ring of transitions with seeded uniform sampling
/// (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(const Transition& t);
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

/// Online/target parameter pair: hard copy every t_target steps, or a
/// polyak average every step.
struct TargetNetworkPair {
  Network online;
  Network target;
  long t_target = 100;
  double polyak = 5e-3;
  bool use_polyak = false;
  long sync_events = 0;

  TargetNetworkPair(Network net, long t_target_, double polyak_,
                    bool use_polyak_)
      : online(net),
        target(std::move(net)),
        t_target(t_target_),
        polyak(polyak_),
        use_polyak(use_polyak_) {}

  void sync(long step);
};

/// Target-network maintenance for one environment step.
void replay_and_sync(ReplayBuffer& buffer, TargetNetworkPair& pair, long step);

/// One-hot encoding of a state index.
std::vector<double> one_hot(int state, int n_states);

/// A batch loss value with its flat parameter gradient.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grads;
  long clipped_fallbacks = 0;
};

/// Mean squared error against y = r + gamma * max_a Q_target(s', a)
/// (no bootstrap on terminal transitions) and its gradient.
LossGrad fqi_loss_grad(const Network& net, const Network& target_net,
                       std::span<const Transition> batch,
                       const AgentConfig& cfg);

/// One fitted-Q step: fqi_loss_grad followed by one Adam update.
double fqi_update(Network& net, const Network& target_net,
                  std::span<const Transition> batch, AdamState& opt,
                  const AgentConfig& cfg);

/// Bootstrap target distribution for one transition: the greedy-by-
/// expectation action's target distribution pushed through z -> r + gamma*z
/// and projected onto the grid; a point mass at r for terminal transitions.
CategoricalDist fzi_categorical_target(const Network& target_net,
                                       const Transition& t,
                                       const AgentConfig& cfg,
                                       const std::vector<double>& grid);

/// -ln q_m + alpha * H(mu, q) with m the target's expectation bin and
/// (mu, alpha) from decompose_exact(target, epsilon). Equals
/// cross_entropy(target, predicted) / (1 - epsilon) whenever the
/// decomposition is exact. Throws ClippedDecompositionError when it is not;
/// the caller must fall back to plain cross-entropy and record the event.
double decomposed_ce_loss(const CategoricalDist& target,
                          const CategoricalDist& predicted, double epsilon);

enum class FziMode { vanilla_ce, decomposed, ablation_mix };

struct FziUpdateResult {
  double loss = 0.0;
  long clipped_fallbacks = 0;
};

/// Batch cross-entropy loss of the chosen mode against bootstrap targets,
/// with its gradient and the count of decomposed-loss fallbacks.
LossGrad fzi_categorical_loss_grad(const Network& net,
                                   const Network& target_net,
                                   std::span<const Transition> batch,
                                   const AgentConfig& cfg, FziMode mode,
                                   double mix_epsilon);

/// One categorical fitted-Z step under the chosen loss mode; `mix_epsilon`
/// feeds decomposed / ablation_mix. Returns the batch loss and how many
/// samples fell back from the decomposed loss to plain cross-entropy.
FziUpdateResult fzi_categorical_update(Network& net, const Network& target_net,
                                       std::span<const Transition> batch,
                                       AdamState& opt, const AgentConfig& cfg,
                                       FziMode mode, double mix_epsilon);

/// n quantile fractions: uniform draws normalized by their cumulative sum,
/// so tau_n = 1 and the sequence ascends almost surely.
std::vector<double> sample_quantile_fractions(int n, Rng& rng);

/// Mean over (fraction i, target sample j) of
/// |tau_i - [u<0]| * Huber_kappa(u) / kappa with u = target_j - value_i.
double quantile_huber_loss(const QuantileDist& predicted,
                           std::span<const double> target_samples,
                           double kappa);

/// Same kernel on raw (possibly unordered) predicted values; also emits
/// d(loss)/d(value_i) when `grad_out` is non-null. Network heads use this.
double quantile_huber_kernel(std::span<const double> fractions,
                             std::span<const double> values,
                             std::span<const double> target_samples,
                             double kappa, std::vector<double>* grad_out);

/// Interpolated critic loss:
///   (1-lambda) * (r + gamma E[q_target(s',a*)] - E[q_theta(s,a)])^2
/// + lambda * H(mu, q_theta(s,a)),
/// a* greedy by target expectation, mu per mu_mode (decompose of the
/// bootstrap target, with the whole target as the clipped-case fallback).
/// lambda = 0 runs exactly the scalar TD path, lambda = 1 exactly the
/// cross-entropy path.
LossGrad derac_critic_loss_grad(const Network& net, const Network& target_net,
                                std::span<const Transition> batch,
                                const AgentConfig& cfg, MuMode mu_mode);

/// derac_critic_loss_grad followed by one Adam update.
double derac_critic_loss(Network& net, const Network& target_net,
                         std::span<const Transition> batch, AdamState& opt,
                         const AgentConfig& cfg, MuMode mu_mode,
                         long* clipped_count = nullptr);

/// Exact-expectation policy objective
///   mean_b [ sum_a pi(a|s_b) values[b][a] + beta * H(pi(.|s_b)) ]
/// and its ascent gradient with respect to the policy parameters.
LossGrad actor_objective_grad(
    const Network& policy_net,
    const std::vector<std::vector<double>>& action_values,
    std::span<const Transition> batch, double beta);

/// Ascend E_{a ~ pi_phi(.|s)} [E[q_theta(s,a)]] by exact expectation over
/// the finite action set. Critic parameters untouched. Returns the batch
/// objective value (before the step).
double derac_actor_step(Network& policy_net, const Network& critic_net,
                        std::span<const Transition> batch, AdamState& opt,
                        const AgentConfig& cfg);

/// Per-action critic expectations E[q(s, a)] for one state, under the
/// categorical head's grid.
std::vector<double> critic_action_values(const Network& critic, int state,
                                         const std::vector<double>& grid);

enum class AgentKind { fqi, fzi_categorical, derac, ac, ac_ve, ac_re, ac_re_ve };
enum class AcVariant { ac, ac_ve, ac_re, ac_re_ve };

struct RunOptions {
  long total_steps = 5000;
  long eval_every = 500;
  int eval_episodes = 10;
};

struct EvalPoint {
  long step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

struct EpisodeReturn {
  long step = 0;
  long episode = 0;
  double ret = 0.0;
};

struct RunMetadata {
  long clipped_fallbacks = 0;
  long sync_events = 0;
  long episodes = 0;
};

struct AgentRunResult {
  std::vector<EvalPoint> curve;
  std::vector<EpisodeReturn> episode_returns;
  std::vector<int> greedy_actions;  // final greedy/mode action per state
  std::vector<std::vector<double>> final_action_probs;  // actor agents
  RunMetadata meta;
};

/// Seeded end-to-end learning run on a tabular environment; bit-reproducible
/// from (cfg, mode, mix_epsilon, run, seed).
AgentRunResult run_agent(const TabularMDP& env, AgentKind kind,
                         const AgentConfig& cfg, FziMode mode,
                         double mix_epsilon, const RunOptions& run,
                         std::uint64_t seed);

/// Actor-critic ablation family: plain AC, +VE (policy entropy bonus),
/// +RE (quantile distributional critic), or both. Returns per-episode
/// returns.
std::vector<EpisodeReturn> ac_variant_run(const TabularMDP& env,
                                          AcVariant variant,
                                          const AgentConfig& cfg,
                                          std::uint64_t seed,
                                          const RunOptions& run = {},
                                          AgentRunResult* full = nullptr);

/// Per-episode learning curve as CSV with columns
/// step,episode,return,seed,variant.
std::string episode_returns_to_csv(std::span<const EpisodeReturn> returns,
                                   std::uint64_t seed,
                                   const std::string& variant);

}  // namespace derl
