#pragma once

#include <string>
#include <vector>

#include "derl/distributions.hpp"
#include "derl/errors.hpp"

namespace derl {

struct TabularMDP;

/// Dense action-value table Q[s][a].
class QTable {
 public:
  QTable() = default;
  QTable(int n_states, int n_actions, double fill = 0.0)
      : n_states_(n_states),
        n_actions_(n_actions),
        q_(static_cast<std::size_t>(n_states) * n_actions, fill) {}

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double at(int s, int a) const {
    return q_[static_cast<std::size_t>(s) * n_actions_ + a];
  }
  double& at(int s, int a) {
    return q_[static_cast<std::size_t>(s) * n_actions_ + a];
  }
  const std::vector<double>& data() const { return q_; }

  double sup_diff(const QTable& other) const;
  std::string to_text() const;

 private:
  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> q_;
};

/// Stochastic policy pi[s][a]; rows sum to 1 within 1e-12.
class Policy {
 public:
  Policy() = default;
  Policy(int n_states, int n_actions, double fill)
      : n_states_(n_states),
        n_actions_(n_actions),
        p_(static_cast<std::size_t>(n_states) * n_actions, fill) {}

  static Policy uniform(int n_states, int n_actions) {
    return Policy(n_states, n_actions, 1.0 / n_actions);
  }
  /// Deterministic policy from explicit action choices.
  static Policy deterministic(const std::vector<int>& actions, int n_actions);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double at(int s, int a) const {
    return p_[static_cast<std::size_t>(s) * n_actions_ + a];
  }
  double& at(int s, int a) {
    return p_[static_cast<std::size_t>(s) * n_actions_ + a];
  }

  /// argmax_a pi[s][a], ties to the lowest index.
  int mode_action(int s) const;
  bool operator==(const Policy& other) const = default;

  void validate() const;

 private:
  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> p_;
};

/// Table of return distributions Z[s][a]. Entries produced by projected
/// backups share one atom grid; exact (unprojected) backups may leave each
/// entry on its own induced grid. `shared_grid()` reports which.
class DistTable {
 public:
  DistTable() = default;
  DistTable(int n_states, int n_actions, const CategoricalDist& fill);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  const CategoricalDist& at(int s, int a) const {
    return z_[static_cast<std::size_t>(s) * n_actions_ + a];
  }
  CategoricalDist& at(int s, int a) {
    return z_[static_cast<std::size_t>(s) * n_actions_ + a];
  }

  bool shared_grid() const;
  /// Expectation of every entry as a QTable.
  QTable expectations() const;
  /// sup over (s,a) of total variation; requires matching shapes and grids.
  double sup_tv(const DistTable& other) const;

  std::string to_text() const;

 private:
  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<CategoricalDist> z_;
};

/// Uniformly spaced grid of `atoms` points spanning [lo, hi].
std::vector<double> make_grid(double lo, double hi, int atoms);

}  // namespace derl
