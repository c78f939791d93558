#include "derl/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

namespace derl {

namespace {

double mean_action_value(const QTable& q, const Policy& pi, int s) {
  double v = 0.0;
  for (int a = 0; a < q.n_actions(); ++a) v += pi.at(s, a) * q.at(s, a);
  return v;
}

double max_action_value(const QTable& q, int s) {
  double v = q.at(s, 0);
  for (int a = 1; a < q.n_actions(); ++a) v = std::max(v, q.at(s, a));
  return v;
}

void check_shapes(const TabularMDP& mdp, int n_states, int n_actions,
                  const char* who) {
  if (n_states != mdp.n_states || n_actions != mdp.n_actions) {
    throw ShapeMismatchError(std::string(who) + ": table/mdp shape mismatch");
  }
}

/// Weighted mixture of reward-shifted, gamma-scaled source distributions,
/// kept on the exact induced atom set (equal atoms merged).
CategoricalDist mix_pushforward(
    const std::vector<std::tuple<double, double, const CategoricalDist*>>&
        terms,
    double gamma) {
  std::vector<std::pair<double, double>> mass;  // (atom, prob)
  for (const auto& [w, r, src] : terms) {
    if (w <= 0.0) continue;
    for (std::size_t i = 0; i < src->size(); ++i) {
      const double p = w * src->probs()[i];
      if (p <= 0.0) continue;
      mass.emplace_back(r + gamma * src->atoms()[i], p);
    }
  }
  std::sort(mass.begin(), mass.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> atoms, probs;
  atoms.reserve(mass.size());
  probs.reserve(mass.size());
  for (const auto& [z, p] : mass) {
    if (!atoms.empty() && atoms.back() == z) {
      probs.back() += p;
    } else {
      atoms.push_back(z);
      probs.push_back(p);
    }
  }
  return CategoricalDist(std::move(atoms), std::move(probs));
}

DistTable distributional_backup_impl(const TabularMDP& mdp, const DistTable& z,
                                     const Policy& pi, bool project,
                                     const std::vector<double>* grid) {
  check_shapes(mdp, z.n_states(), z.n_actions(), "distributional_backup");
  DistTable out(mdp.n_states, mdp.n_actions, z.at(0, 0));
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      std::vector<std::tuple<double, double, const CategoricalDist*>> terms;
      const CategoricalDist& rdist = mdp.r(s, a).dist();
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double ps = mdp.p(s, a, s2);
        if (ps == 0.0) continue;
        for (int a2 = 0; a2 < mdp.n_actions; ++a2) {
          const double w = ps * pi.at(s2, a2);
          if (w == 0.0) continue;
          for (std::size_t k = 0; k < rdist.size(); ++k) {
            const double wk = w * rdist.probs()[k];
            if (wk == 0.0) continue;
            terms.emplace_back(wk, rdist.atoms()[k], &z.at(s2, a2));
          }
        }
      }
      CategoricalDist mixed = mix_pushforward(terms, mdp.gamma);
      out.at(s, a) = project ? project_categorical(mixed, *grid)
                             : std::move(mixed);
    }
  }
  return out;
}

}  // namespace

QTable bellman_backup(const TabularMDP& mdp, const QTable& q,
                      const Policy& pi) {
  check_shapes(mdp, q.n_states(), q.n_actions(), "bellman_backup");
  QTable out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double next = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double ps = mdp.p(s, a, s2);
        if (ps != 0.0) next += ps * mean_action_value(q, pi, s2);
      }
      out.at(s, a) = mdp.r(s, a).mean() + mdp.gamma * next;
    }
  }
  return out;
}

QTable bellman_optimality_backup(const TabularMDP& mdp, const QTable& q) {
  check_shapes(mdp, q.n_states(), q.n_actions(), "bellman_optimality_backup");
  QTable out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double next = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double ps = mdp.p(s, a, s2);
        if (ps != 0.0) next += ps * max_action_value(q, s2);
      }
      out.at(s, a) = mdp.r(s, a).mean() + mdp.gamma * next;
    }
  }
  return out;
}

DistTable distributional_backup(const TabularMDP& mdp, const DistTable& z,
                                const Policy& pi, bool project) {
  if (project) {
    if (!z.shared_grid()) {
      throw AtomMismatchError(
          "distributional_backup: projection requires a shared input grid");
    }
    const std::vector<double>& grid = z.at(0, 0).atoms();
    return distributional_backup_impl(mdp, z, pi, true, &grid);
  }
  return distributional_backup_impl(mdp, z, pi, false, nullptr);
}

DistTable distributional_optimality_backup(const TabularMDP& mdp,
                                           const DistTable& z,
                                           const std::vector<double>& grid) {
  check_shapes(mdp, z.n_states(), z.n_actions(),
               "distributional_optimality_backup");
  // Greedy by expectation, ties to the lowest action index.
  std::vector<int> greedy(mdp.n_states, 0);
  for (int s = 0; s < mdp.n_states; ++s) {
    double best = expectation(z.at(s, 0));
    for (int a = 1; a < mdp.n_actions; ++a) {
      const double e = expectation(z.at(s, a));
      if (e > best) {
        best = e;
        greedy[s] = a;
      }
    }
  }
  const Policy pi = Policy::deterministic(greedy, mdp.n_actions);
  return distributional_backup_impl(mdp, z, pi, true, &grid);
}

double f_transform(double entropy_value, double lambda, double gamma) {
  if (entropy_value < 0.0) {
    throw NegativeEntropyError("f_transform: entropy must be nonnegative");
  }
  if (!(lambda >= 0.0) || !(lambda <= 1.0)) {
    throw Error("f_transform: lambda must lie in [0,1]");
  }
  return std::sqrt(lambda * entropy_value) / gamma;
}

double default_entropy_bound(int atoms) {
  return std::log(static_cast<double>(atoms)) + 10.0;
}

QTable build_entropy_bonus(const TabularMDP& mdp, const DistTable& mu,
                           const DistTable& q, double lambda,
                           double entropy_bound) {
  check_shapes(mdp, mu.n_states(), mu.n_actions(), "build_entropy_bonus");
  check_shapes(mdp, q.n_states(), q.n_actions(), "build_entropy_bonus");
  QTable bonus(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.is_terminal(s)) continue;  // episodes end here; no correction
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double h = cross_entropy(mu.at(s, a), q.at(s, a));
      if (h > entropy_bound) {
        throw EntropyUnboundedError(
            "entropy regularizer: cross-entropy exceeds the bound M");
      }
      bonus.at(s, a) = mdp.gamma * f_transform(h, lambda, mdp.gamma);
    }
  }
  return bonus;
}

QTable der_bellman_backup(const TabularMDP& mdp, const QTable& q,
                          const Policy& pi, const EntropyRegularizer& reg) {
  QTable out = bellman_backup(mdp, q, pi);
  if (reg.lambda == 0.0) return out;  // f vanishes; skip H entirely
  if (reg.mu == nullptr || reg.z == nullptr) {
    throw Error("der_bellman_backup: regularizer tables required");
  }
  const double bound =
      reg.entropy_bound > 0.0 ? reg.entropy_bound
                              : default_entropy_bound(static_cast<int>(
                                    reg.z->at(0, 0).size()));
  const QTable bonus =
      build_entropy_bonus(mdp, *reg.mu, *reg.z, reg.lambda, bound);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      out.at(s, a) += bonus.at(s, a);
    }
  }
  return out;
}

QTable policy_evaluation_with_bonus(const TabularMDP& mdp, const Policy& pi,
                                    const QTable& bonus, double tol,
                                    int max_sweeps) {
  QTable q(mdp.n_states, mdp.n_actions);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    QTable next = bellman_backup(mdp, q, pi);
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        next.at(s, a) += bonus.at(s, a);
      }
    }
    const double d = next.sup_diff(q);
    q = std::move(next);
    if (d < tol) return q;
  }
  throw NonConvergenceError("policy_evaluation_with_bonus: exceeded max sweeps");
}

QTable policy_evaluation(const TabularMDP& mdp, const Policy& pi,
                         BackupKind kind, double tol,
                         const EntropyRegularizer* reg, int max_sweeps) {
  if (kind == BackupKind::der && reg == nullptr) {
    throw Error("policy_evaluation: der backup needs a regularizer");
  }
  if (kind == BackupKind::der && reg->lambda > 0.0) {
    if (reg->mu == nullptr || reg->z == nullptr) {
      throw Error("policy_evaluation: der backup needs regularizer tables");
    }
    const double bound =
        reg->entropy_bound > 0.0 ? reg->entropy_bound
                                 : default_entropy_bound(static_cast<int>(
                                       reg->z->at(0, 0).size()));
    const QTable bonus =
        build_entropy_bonus(mdp, *reg->mu, *reg->z, reg->lambda, bound);
    return policy_evaluation_with_bonus(mdp, pi, bonus, tol, max_sweeps);
  }
  QTable q(mdp.n_states, mdp.n_actions);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    QTable next = bellman_backup(mdp, q, pi);
    const double d = next.sup_diff(q);
    q = std::move(next);
    if (d < tol) return q;
  }
  throw NonConvergenceError("policy_evaluation: exceeded max sweeps");
}

Policy policy_improvement(const QTable& q) {
  std::vector<int> best(q.n_states(), 0);
  for (int s = 0; s < q.n_states(); ++s) {
    for (int a = 1; a < q.n_actions(); ++a) {
      if (q.at(s, a) > q.at(s, best[s])) best[s] = a;
    }
  }
  return Policy::deterministic(best, q.n_actions());
}

DistTable distributional_policy_evaluation(const TabularMDP& mdp,
                                           const Policy& pi,
                                           const std::vector<double>& grid,
                                           double tol, int max_sweeps) {
  // Start from the point mass at the atom nearest zero.
  std::size_t z0 = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs(grid[i]) < std::abs(grid[z0])) z0 = i;
  }
  DistTable z(mdp.n_states, mdp.n_actions, CategoricalDist::delta(grid, z0));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    DistTable next = distributional_backup(mdp, z, pi, true);
    const double d = next.sup_tv(z);
    z = std::move(next);
    if (d < tol) return z;
  }
  throw NonConvergenceError(
      "distributional_policy_evaluation: exceeded max sweeps");
}

DistTable build_mu_table(const TabularMDP& mdp, const DistTable& z,
                         const Policy& pi, double epsilon, MuMode mode) {
  DistTable target = distributional_backup(mdp, z, pi, true);
  if (mode == MuMode::whole_target) return target;
  DistTable mu = target;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      mu.at(s, a) = decompose_exact(target.at(s, a), epsilon).mu;
    }
  }
  return mu;
}

DistTable floor_table(const DistTable& z, double floor_weight) {
  if (floor_weight == 0.0) return z;
  DistTable out = z;
  for (int s = 0; s < z.n_states(); ++s) {
    for (int a = 0; a < z.n_actions(); ++a) {
      const CategoricalDist& d = z.at(s, a);
      const double u = floor_weight / static_cast<double>(d.size());
      std::vector<double> probs(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        probs[i] = (1.0 - floor_weight) * d.probs()[i] + u;
      }
      out.at(s, a) = CategoricalDist(d.atoms(), std::move(probs));
    }
  }
  return out;
}

DerpiResult derpi(const TabularMDP& mdp, const DerpiOptions& opts) {
  if (!(opts.lambda >= 0.0) || !(opts.lambda <= 1.0)) {
    throw Error("derpi: lambda must lie in [0,1]");
  }
  auto [lo, hi] = mdp.return_bounds();
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const std::vector<double> grid = make_grid(lo, hi, opts.atoms);
  const double bound = opts.entropy_bound > 0.0
                           ? opts.entropy_bound
                           : default_entropy_bound(opts.atoms);

  DerpiResult res;
  Policy pi = Policy::uniform(mdp.n_states, mdp.n_actions);
  DistTable z;
  QTable bonus(mdp.n_states, mdp.n_actions);
  bool have_regularizer = false;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (opts.lambda > 0.0 &&
        (!have_regularizer || opts.refresh_each_iteration)) {
      z = distributional_policy_evaluation(mdp, pi, grid, opts.tol);
      const DistTable q_floor = floor_table(z, opts.entropy_floor);
      const DistTable mu =
          build_mu_table(mdp, z, pi, opts.epsilon, opts.mu_mode);
      bonus = build_entropy_bonus(mdp, mu, q_floor, opts.lambda, bound);
      have_regularizer = true;
    }
    QTable q = opts.lambda > 0.0
                   ? policy_evaluation_with_bonus(mdp, pi, bonus, opts.tol)
                   : policy_evaluation(mdp, pi, BackupKind::plain, opts.tol);
    res.trace.push_back(q);
    Policy improved = policy_improvement(q);
    ++res.iterations;
    if (improved == pi) {
      res.policy = std::move(improved);
      res.q = std::move(q);
      if (z.n_states() == 0) {
        z = distributional_policy_evaluation(mdp, res.policy, grid, opts.tol);
      }
      res.z = std::move(z);
      return res;
    }
    pi = std::move(improved);
  }
  throw NonConvergenceError("derpi: policy did not stabilize");
}

std::pair<Policy, QTable> soft_policy_iteration(const TabularMDP& mdp,
                                                double beta, double tol,
                                                int max_iters) {
  if (beta < 0.0) throw Error("soft_policy_iteration: beta must be >= 0");
  Policy pi = Policy::uniform(mdp.n_states, mdp.n_actions);
  QTable q(mdp.n_states, mdp.n_actions);
  for (int iter = 0; iter < max_iters; ++iter) {
    // Evaluation with the entropy-augmented reward r + beta * H(pi(.|s)).
    QTable bonus(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
      if (mdp.is_terminal(s)) continue;
      double h = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        const double p = pi.at(s, a);
        if (p > 0.0) h -= p * std::log(p);
      }
      for (int a = 0; a < mdp.n_actions; ++a) bonus.at(s, a) = beta * h;
    }
    q = policy_evaluation_with_bonus(mdp, pi, bonus, tol);

    Policy next(mdp.n_states, mdp.n_actions, 0.0);
    if (beta == 0.0) {
      next = policy_improvement(q);
    } else {
      for (int s = 0; s < mdp.n_states; ++s) {
        const double qmax = max_action_value(q, s);
        double norm = 0.0;
        for (int a = 0; a < mdp.n_actions; ++a) {
          next.at(s, a) = std::exp((q.at(s, a) - qmax) / beta);
          norm += next.at(s, a);
        }
        for (int a = 0; a < mdp.n_actions; ++a) next.at(s, a) /= norm;
      }
    }
    double change = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        change = std::max(change, std::abs(next.at(s, a) - pi.at(s, a)));
      }
    }
    pi = std::move(next);
    if (change < tol) return {pi, q};
  }
  throw NonConvergenceError("soft_policy_iteration: policy did not stabilize");
}

QTable value_iteration(const TabularMDP& mdp, double tol, int max_sweeps) {
  QTable q(mdp.n_states, mdp.n_actions);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    QTable next = bellman_optimality_backup(mdp, q);
    const double d = next.sup_diff(q);
    q = std::move(next);
    if (d < tol) return q;
  }
  throw NonConvergenceError("value_iteration: exceeded max sweeps");
}

DistTable distributional_value_iteration(const TabularMDP& mdp,
                                         const std::vector<double>& grid,
                                         double tol, int max_sweeps) {
  std::size_t z0 = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs(grid[i]) < std::abs(grid[z0])) z0 = i;
  }
  DistTable z(mdp.n_states, mdp.n_actions, CategoricalDist::delta(grid, z0));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    DistTable next = distributional_optimality_backup(mdp, z, grid);
    const double d = next.sup_tv(z);
    z = std::move(next);
    if (d < tol) return z;
  }
  throw NonConvergenceError(
      "distributional_value_iteration: exceeded max sweeps");
}

std::string trace_to_csv(const std::vector<QTable>& trace) {
  std::string out = "iter,s,a,q\n";
  char buf[96];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const QTable& q = trace[i];
    for (int s = 0; s < q.n_states(); ++s) {
      for (int a = 0; a < q.n_actions(); ++a) {
        std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.12g\n", i, s, a,
                      q.at(s, a));
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace derl
