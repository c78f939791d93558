#pragma once

#include <optional>
#include <vector>

#include "derl/mdp.hpp"
#include "derl/tables.hpp"

namespace derl {

/// (T^pi Q)(s,a) = E[R(s,a)] + gamma * sum_s' P(s'|s,a) sum_a' pi(a'|s') Q(s',a').
QTable bellman_backup(const TabularMDP& mdp, const QTable& q, const Policy& pi);

/// Optimality variant: max over a' instead of the pi-average.
QTable bellman_optimality_backup(const TabularMDP& mdp, const QTable& q);

/// One exact distributional backup: each output entry is the mixture over
/// (s', a', reward outcome) of the input distributions pushed through
/// z -> r + gamma * z. With `project` the mixture is re-gridded onto the
/// input table's shared grid; without it the entry stays on the exact
/// induced atom set.
DistTable distributional_backup(const TabularMDP& mdp, const DistTable& z,
                                const Policy& pi, bool project);

/// Greedy-by-expectation optimality variant of the distributional backup,
/// always projected onto `grid`.
DistTable distributional_optimality_backup(const TabularMDP& mdp,
                                           const DistTable& z,
                                           const std::vector<double>& grid);

/// Entropy-to-reward transform f(H) = sqrt(lambda * H) / gamma.
/// Monotone nondecreasing in H; lambda in [0,1]; H must be nonnegative.
double f_transform(double entropy_value, double lambda, double gamma);

/// Per-(s,a) regularizer inputs for the entropy-corrected backup.
struct EntropyRegularizer {
  const DistTable* mu = nullptr;   // target remainder distributions
  const DistTable* z = nullptr;    // current value distributions (q)
  double lambda = 0.0;
  double entropy_bound = 0.0;      // bound M on each cross-entropy
};

/// Default entropy bound M for a grid of `atoms` bins.
double default_entropy_bound(int atoms);

/// gamma * f(H(mu[s][a], q[s][a])) per (s,a), zero at terminal states: the
/// reward correction the entropy-regularized backup adds. Throws
/// EntropyUnboundedError when a cross-entropy exceeds `entropy_bound`.
QTable build_entropy_bonus(const TabularMDP& mdp, const DistTable& mu,
                           const DistTable& q, double lambda,
                           double entropy_bound);

/// Entropy-corrected backup: plain Bellman backup plus the reward correction
/// gamma * f(H(mu[s][a], z[s][a])) per (s,a). With lambda = 0 the correction
/// is skipped entirely and the result is bitwise equal to bellman_backup.
/// Throws EntropyUnboundedError when some H exceeds the configured bound.
QTable der_bellman_backup(const TabularMDP& mdp, const QTable& q,
                          const Policy& pi, const EntropyRegularizer& reg);

enum class BackupKind { plain, der };

/// Iterate the chosen backup from Q = 0 until the sup-norm change drops
/// below tol. `reg` is required for BackupKind::der.
QTable policy_evaluation(const TabularMDP& mdp, const Policy& pi,
                         BackupKind kind, double tol,
                         const EntropyRegularizer* reg = nullptr,
                         int max_sweeps = 1000000);

/// Plain policy evaluation with an extra per-(s,a) reward bonus.
QTable policy_evaluation_with_bonus(const TabularMDP& mdp, const Policy& pi,
                                    const QTable& bonus, double tol,
                                    int max_sweeps = 1000000);

/// Greedy deterministic policy; ties break to the lowest action index.
Policy policy_improvement(const QTable& q);

/// Iterate the projected distributional backup under pi on `grid` until the
/// sup total-variation change drops below tol.
DistTable distributional_policy_evaluation(const TabularMDP& mdp,
                                           const Policy& pi,
                                           const std::vector<double>& grid,
                                           double tol, int max_sweeps = 100000);

/// How the remainder distribution mu is obtained from a bootstrap target.
enum class MuMode {
  decompose,     // exact remainder via decompose_exact
  whole_target,  // substitute the whole target distribution for mu
};

/// For each (s,a): one-step bootstrap target of z under pi (projected onto
/// z's grid), reduced to a mu distribution per `mode`.
DistTable build_mu_table(const TabularMDP& mdp, const DistTable& z,
                         const Policy& pi, double epsilon, MuMode mode);

/// Mix each entry with the uniform distribution at weight `floor_weight`,
/// keeping cross-entropies against it finite.
DistTable floor_table(const DistTable& z, double floor_weight);

struct DerpiOptions {
  double lambda = 0.0;        // regularization strength, in [0,1]
  double epsilon = 0.5;       // decomposition proportion for mu
  double tol = 1e-10;
  int max_iters = 1000;
  int atoms = 51;
  MuMode mu_mode = MuMode::decompose;
  // Uniform mixing weight applied to q before taking cross-entropies.
  // At 1e-4, H(mu, q) <= ln(atoms) - ln(floor) stays below the default
  // entropy bound for every mu.
  double entropy_floor = 1e-4;
  double entropy_bound = 0.0;    // 0 = default_entropy_bound(atoms)
  /// Refresh the value-distribution regularizer from the current policy at
  /// every improvement step instead of freezing it after the initial
  /// evaluation. The frozen default keeps the corrected reward fixed, which
  /// is what makes the improvement trace provably monotone.
  bool refresh_each_iteration = false;
};

struct DerpiResult {
  Policy policy;
  QTable q;
  DistTable z;
  std::vector<QTable> trace;  // corrected Q after each improvement
  int iterations = 0;
};

/// Policy iteration under the entropy-corrected backup: evaluate the current
/// policy's value distributions, build mu and the corrected reward, run
/// corrected policy evaluation, improve greedily; stop at policy stability.
DerpiResult derpi(const TabularMDP& mdp, const DerpiOptions& opts);

/// Soft policy iteration: evaluation with the entropy-augmented reward
/// r + beta * H(pi(.|s)); improvement pi(a|s) proportional to exp(Q/beta)
/// (greedy when beta = 0). Stops when the policy change drops below tol.
std::pair<Policy, QTable> soft_policy_iteration(const TabularMDP& mdp,
                                                double beta, double tol,
                                                int max_iters = 1000);

QTable value_iteration(const TabularMDP& mdp, double tol,
                       int max_sweeps = 1000000);

DistTable distributional_value_iteration(const TabularMDP& mdp,
                                         const std::vector<double>& grid,
                                         double tol, int max_sweeps = 100000);

/// Write a trace as CSV lines "iter,s,a,q".
std::string trace_to_csv(const std::vector<QTable>& trace);

}  // namespace derl
