#pragma once

#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include "derl/distributions.hpp"
#include "derl/rng.hpp"

namespace derl {

/// Per-(s,a) reward: a deterministic scalar or a categorical outcome law.
/// Rewards are independent of the realized next state.
class RewardModel {
 public:
  RewardModel() : RewardModel(0.0) {}
  explicit RewardModel(double value)
      : dist_(CategoricalDist::point(value)), deterministic_(true) {}
  explicit RewardModel(CategoricalDist dist)
      : dist_(std::move(dist)), deterministic_(dist_.size() == 1) {}

  double mean() const { return expectation(dist_); }
  bool deterministic() const { return deterministic_; }
  const CategoricalDist& dist() const { return dist_; }

  double sample(Rng& rng) const {
    if (deterministic_) return dist_.atoms()[0];
    return dist_.atoms()[rng.categorical(dist_.probs())];
  }

 private:
  CategoricalDist dist_;
  bool deterministic_;
};

/// Finite MDP with dense transition tensor P[s][a][s'] and per-(s,a) reward
/// models. Terminal states are absorbing self-loops with zero reward.
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.99;
  int start_state = 0;
  std::vector<double> transition;    // [s * A * S + a * S + s']
  std::vector<RewardModel> reward;   // [s * A + a]
  std::vector<char> terminal;        // per state

  double p(int s, int a, int s2) const {
    return transition[static_cast<std::size_t>(s) * n_actions * n_states +
                      static_cast<std::size_t>(a) * n_states + s2];
  }
  double& p(int s, int a, int s2) {
    return transition[static_cast<std::size_t>(s) * n_actions * n_states +
                      static_cast<std::size_t>(a) * n_states + s2];
  }
  const RewardModel& r(int s, int a) const {
    return reward[static_cast<std::size_t>(s) * n_actions + a];
  }
  RewardModel& r(int s, int a) {
    return reward[static_cast<std::size_t>(s) * n_actions + a];
  }
  bool is_terminal(int s) const { return terminal[s] != 0; }

  /// Throws if a transition row does not sum to 1 within 1e-12, an entry is
  /// negative, gamma is outside (0,1), or a terminal state is not a zero-
  /// reward self-loop.
  void validate() const;

  /// [min, max] over all reward outcomes.
  std::pair<double, double> reward_bounds() const;
  /// [Rmin/(1-gamma), Rmax/(1-gamma)]: the achievable return range.
  std::pair<double, double> return_bounds() const;

  std::string to_text() const;
  static TabularMDP from_text(const std::string& text);
};

struct Step {
  int state;
  int action;
  double reward;
  int next_state;
  bool done;
};
using Trajectory = std::vector<Step>;

/// Chain of n states. Actions {0 = left, 1 = right}; the intended move
/// succeeds with probability 1 - slip, otherwise the opposite move happens.
/// State n-1 is the absorbing right end; pushing into it from state n-2 pays
/// 1. Bumping the left wall (action left in state 0) pays 0.01. All other
/// rewards are 0. Rewards attach to (s,a) so they are independent of the
/// slip outcome.
TabularMDP make_chain(int n, double slip, double gamma);

/// make_chain with the final push reward replaced by a two-point law
/// {1 - spread, 1 + spread} at probability 1/2 each: same mean, higher
/// dispersion.
TabularMDP make_risky_chain(int n, double slip, double gamma, double spread);

/// width x height gridworld, deterministic moves {up, down, left, right}.
/// Bottom row: start at (0,0), goal at (width-1,0) worth 1 (terminal), the
/// cells between them form the cliff: stepping in pays fall_penalty and
/// resets to the start. Walls bounce.
TabularMDP make_cliff_grid(int width, int height, double fall_penalty,
                           double gamma);

/// One decision state, two actions, episode length 1. SAFE (0) pays `mean`
/// deterministically; RISKY (1) pays mean-spread or mean+spread with
/// probability 1/2 each. Equal expectations by construction.
TabularMDP make_risky_bandit(double mean, double spread);

/// Draw (reward, next_state, done). Terminal states return (0, s, true).
/// Throws InvalidStateActionError for out-of-range (s,a).
std::tuple<double, int, bool> sample_transition(const TabularMDP& mdp, int s,
                                                int a, Rng& rng);

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path);
TabularMDP load_mdp(const std::filesystem::path& path);

}  // namespace derl
