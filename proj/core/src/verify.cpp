#include "derl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "derl/agents.hpp"
#include "derl/operators.hpp"
#include "derl/rng.hpp"

namespace derl {

namespace {

std::vector<double> random_grid(Rng& rng, int min_atoms, int max_atoms,
                                double lo, double hi) {
  const int n =
      min_atoms + static_cast<int>(rng.uniform_int(max_atoms - min_atoms + 1));
  // Strictly ascending atoms built from positive gaps.
  std::vector<double> gaps(n);
  double total = 0.0;
  for (double& g : gaps) total += (g = 0.05 + rng.uniform());
  std::vector<double> atoms(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += gaps[i];
    atoms[i] = lo + (hi - lo) * (acc / total);
  }
  atoms[0] = lo + (hi - lo) * (gaps[0] / total) * 0.5;
  return atoms;
}

std::vector<double> random_probs(Rng& rng, std::size_t n, double floor) {
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) total += (v = floor + rng.uniform());
  for (double& v : p) v /= total;
  return p;
}

CategoricalDist random_dist(Rng& rng, const std::vector<double>& grid,
                            double floor) {
  return CategoricalDist(grid, random_probs(rng, grid.size(), floor));
}

Policy random_policy(Rng& rng, int n_states, int n_actions) {
  Policy pi(n_states, n_actions, 0.0);
  for (int s = 0; s < n_states; ++s) {
    const std::vector<double> row = random_probs(rng, n_actions, 0.05);
    for (int a = 0; a < n_actions; ++a) pi.at(s, a) = row[a];
  }
  return pi;
}

/// Random ergodic MDP with rewards in [-1,1] and gamma in [0.5, 0.95];
/// no terminal states, so infinite-horizon operators apply directly.
TabularMDP random_mdp(Rng& rng, int n_states, int n_actions,
                      bool stochastic_rewards) {
  TabularMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = rng.uniform(0.5, 0.95);
  m.transition.assign(
      static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  m.terminal.assign(n_states, 0);
  m.reward.reserve(static_cast<std::size_t>(n_states) * n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const std::vector<double> row = random_probs(rng, n_states, 0.02);
      for (int s2 = 0; s2 < n_states; ++s2) m.p(s, a, s2) = row[s2];
      if (stochastic_rewards) {
        const double lo = rng.uniform(-1.0, 0.0);
        const double hi = rng.uniform(0.0, 1.0);
        m.reward.push_back(RewardModel(
            CategoricalDist({lo, hi}, {0.5, 0.5})));
      } else {
        m.reward.push_back(RewardModel(rng.uniform(-1.0, 1.0)));
      }
    }
  }
  // Renormalize rows exactly.
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double row = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) row += m.p(s, a, s2);
      for (int s2 = 0; s2 < n_states; ++s2) m.p(s, a, s2) /= row;
    }
  }
  return m;
}

DistTable random_table(Rng& rng, int n_states, int n_actions,
                       const std::vector<double>& grid, double floor) {
  DistTable z(n_states, n_actions, random_dist(rng, grid, floor));
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      z.at(s, a) = random_dist(rng, grid, floor);
    }
  }
  return z;
}

double sup_kl(const DistTable& a, const DistTable& b) {
  double worst = 0.0;
  for (int s = 0; s < a.n_states(); ++s) {
    for (int ac = 0; ac < a.n_actions(); ++ac) {
      worst = std::max(worst, kl_divergence(a.at(s, ac), b.at(s, ac)));
    }
  }
  return worst;
}

/// Best deterministic policy by exhaustive enumeration, ranked by total
/// state-action value under exact evaluation.
Policy enumerate_optimal_policy(const TabularMDP& mdp, double tol) {
  const int S = mdp.n_states;
  const int A = mdp.n_actions;
  long count = 1;
  for (int s = 0; s < S; ++s) count *= A;
  Policy best;
  double best_total = -1e300;
  std::vector<int> actions(S, 0);
  for (long code = 0; code < count; ++code) {
    long c = code;
    for (int s = 0; s < S; ++s) {
      actions[s] = static_cast<int>(c % A);
      c /= A;
    }
    const Policy pi = Policy::deterministic(actions, A);
    const QTable q = policy_evaluation(mdp, pi, BackupKind::plain, tol);
    double total = 0.0;
    for (int s = 0; s < S; ++s) total += q.at(s, actions[s]);
    if (total > best_total) {
      best_total = total;
      best = pi;
    }
  }
  return best;
}

}  // namespace

PropertyReport check_decomposition_bound(long trials, std::uint64_t seed) {
  Rng rng(seed);
  PropertyReport rep{"decomposition_sup_bound", trials, 0, -1e300, seed};
  for (long t = 0; t < trials; ++t) {
    const std::vector<double> grid = random_grid(rng, 2, 12, -1.0, 1.0);
    const CategoricalDist p = random_dist(rng, grid, 0.0);
    const double eps = rng.uniform(0.01, 0.99);

    const double e = expectation(p);
    double f_left = 0.0;  // F(E-) = P(X < E)
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p.atoms()[i] < e) f_left += p.probs()[i];
    }

    // Brute-force sup of |F - ((1-eps) 1{x>=E} + eps F)| over the grid,
    // with F taken left-continuously at the probe x = E.
    double sup = (1.0 - eps) * (1.0 - f_left);
    double cdf = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      cdf += p.probs()[i];
      const double diff = p.atoms()[i] < e ? cdf : 1.0 - cdf;
      sup = std::max(sup, (1.0 - eps) * diff);
    }

    const double closed = (1.0 - eps) * std::max(1.0 - f_left, f_left);
    const double eq_err = std::abs(sup - closed);

    // Variance bound with c the bound on |X - E[X]|.
    double c = 0.0;
    for (double z : p.atoms()) c = std::max(c, std::abs(z - e));
    const double ratio = c > 0.0 ? variance(p) / (2.0 * c * c) : 0.0;
    const double bound = (1.0 - eps) * (1.0 - ratio);
    const double bound_gap = sup - bound;

    rep.worst_margin = std::max(rep.worst_margin, std::max(eq_err, bound_gap));
    if (eq_err > 1e-12 || bound_gap > 1e-9) ++rep.failures;
  }
  return rep;
}

PropertyReport check_kl_nonexpansion(long trials, std::uint64_t seed) {
  Rng rng(seed);
  PropertyReport rep{"kl_nonexpansion", trials, 0, -1e300, seed};
  for (long t = 0; t < trials; ++t) {
    const int S = 2 + static_cast<int>(rng.uniform_int(3));
    const int A = 2 + static_cast<int>(rng.uniform_int(2));
    const TabularMDP mdp = random_mdp(rng, S, A, /*stochastic_rewards=*/false);
    const std::vector<double> grid = random_grid(rng, 3, 8, -2.0, 2.0);
    const DistTable z1 = random_table(rng, S, A, grid, 0.01);
    const DistTable z2 = random_table(rng, S, A, grid, 0.01);
    const Policy pi = random_policy(rng, S, A);

    const double before = sup_kl(z1, z2);
    const DistTable t1 = distributional_backup(mdp, z1, pi, false);
    const DistTable t2 = distributional_backup(mdp, z2, pi, false);
    const double after = sup_kl(t1, t2);

    const double margin = after - before;
    rep.worst_margin = std::max(rep.worst_margin, margin);
    if (margin > 1e-10) ++rep.failures;
  }
  return rep;
}

PropertyReport check_pinsker_and_w1(long trials, std::uint64_t seed) {
  Rng rng(seed);
  PropertyReport rep{"pinsker_w1_chain", trials, 0, -1e300, seed};
  for (long t = 0; t < trials; ++t) {
    const std::vector<double> grid = random_grid(rng, 2, 12, -1.5, 1.5);
    const CategoricalDist p = random_dist(rng, grid, 0.0);
    const CategoricalDist q = random_dist(rng, grid, 1e-4);

    const double tv = total_variation(p, q);
    const double kl = kl_divergence(p, q);
    const double pinsker_gap = tv - std::sqrt(0.5 * kl);

    const double diameter = grid.back() - grid.front();
    const double w1 = wasserstein(p, q, 1);
    const double transport_gap = w1 - diameter * tv;

    const double margin = std::max(pinsker_gap, transport_gap);
    rep.worst_margin = std::max(rep.worst_margin, margin);
    if (margin > 1e-10) ++rep.failures;
  }
  return rep;
}

PropertyReport check_expectation_contraction(long trials, std::uint64_t seed) {
  Rng rng(seed);
  PropertyReport rep{"expectation_contraction", trials, 0, -1e300, seed};
  for (long t = 0; t < trials; ++t) {
    const int S = 2 + static_cast<int>(rng.uniform_int(3));
    const int A = 2 + static_cast<int>(rng.uniform_int(2));
    const TabularMDP mdp = random_mdp(rng, S, A, t % 3 == 0);
    const std::vector<double> grid = random_grid(rng, 3, 8, -2.0, 2.0);
    const DistTable z1 = random_table(rng, S, A, grid, 0.0);
    const DistTable z2 = random_table(rng, S, A, grid, 0.0);
    const Policy pi = random_policy(rng, S, A);

    const double before = z1.expectations().sup_diff(z2.expectations());
    const DistTable t1 = distributional_backup(mdp, z1, pi, false);
    const DistTable t2 = distributional_backup(mdp, z2, pi, false);
    const double after = t1.expectations().sup_diff(t2.expectations());

    const double margin = after - mdp.gamma * before;
    rep.worst_margin = std::max(rep.worst_margin, margin);
    if (margin > 1e-10) ++rep.failures;
  }
  return rep;
}

PropertyReport check_decomposed_ce_identity(long trials, std::uint64_t seed) {
  Rng rng(seed);
  PropertyReport rep{"decomposed_ce_identity", trials, 0, -1e300, seed};
  for (long t = 0; t < trials; ++t) {
    const std::vector<double> grid = random_grid(rng, 2, 10, -1.0, 1.0);
    const CategoricalDist p = random_dist(rng, grid, 0.0);
    const std::size_t m = expectation_bin(p);
    // eps with 1 - eps <= p_m keeps the decomposition exact.
    const double eps = 1.0 - p.probs()[m] * rng.uniform(0.05, 0.95);
    const CategoricalDist q = random_dist(rng, grid, 1e-3);

    const Decomposition dec = decompose_exact(p, eps);
    if (dec.clipped) {  // generator guarantees this cannot happen
      ++rep.failures;
      continue;
    }
    const double lhs = (1.0 - eps) * (-std::log(q.probs()[m])) +
                       eps * cross_entropy(dec.mu, q);
    const double rhs = cross_entropy(p, q);
    const double err = std::abs(lhs - rhs);
    rep.worst_margin = std::max(rep.worst_margin, err);
    if (err > 1e-12) ++rep.failures;
  }

  // Argmin agreement of the two loss forms over a fine simplex grid.
  {
    const std::vector<double> grid = {0.0, 1.0, 2.0};
    const CategoricalDist p(grid, {0.2, 0.5, 0.3});
    const double eps = 0.6;
    const int steps = 200;
    double best_dec = 1e300, best_ce = 1e300;
    int arg_dec = -1, arg_ce = -1;
    for (int i = 1; i < steps; ++i) {
      for (int j = 1; j < steps - i; ++j) {
        const double q1 = static_cast<double>(i) / steps;
        const double q2 = static_cast<double>(j) / steps;
        const CategoricalDist q(grid, {q1, q2, 1.0 - q1 - q2});
        const double dec_loss = decomposed_ce_loss(p, q, eps);
        const double ce_loss = cross_entropy(p, q);
        const int code = i * steps + j;
        if (dec_loss < best_dec) {
          best_dec = dec_loss;
          arg_dec = code;
        }
        if (ce_loss < best_ce) {
          best_ce = ce_loss;
          arg_ce = code;
        }
      }
    }
    if (arg_dec != arg_ce) ++rep.failures;
  }
  return rep;
}

PropertyReport check_derpi(long trials, std::uint64_t seed) {
  Rng rng(seed);
  PropertyReport rep{"derpi_certificates", trials, 0, -1e300, seed};
  const double tol = 1e-12;
  for (long t = 0; t < trials; ++t) {
    const int S = 2 + static_cast<int>(rng.uniform_int(5));
    const int A = 2 + static_cast<int>(rng.uniform_int(2));
    const TabularMDP mdp = random_mdp(rng, S, A, t % 3 == 0);

    // (a) lambda = 0 recovers the enumerated optimal policy.
    DerpiOptions opts;
    opts.lambda = 0.0;
    opts.tol = tol;
    opts.atoms = 31;
    const DerpiResult plain = derpi(mdp, opts);
    const Policy oracle = enumerate_optimal_policy(mdp, tol);
    if (!(plain.policy == oracle)) {
      ++rep.failures;
      continue;
    }

    // (b) monotone improvement traces for lambda in {0, 0.3, 0.7}.
    bool failed = false;
    for (const double lambda : {0.0, 0.3, 0.7}) {
      DerpiOptions lo = opts;
      lo.lambda = lambda;
      const DerpiResult res = derpi(mdp, lo);
      for (std::size_t i = 0; i + 1 < res.trace.size() && !failed; ++i) {
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < A; ++a) {
            const double drop = res.trace[i].at(s, a) - res.trace[i + 1].at(s, a);
            rep.worst_margin = std::max(rep.worst_margin, drop);
            if (drop > 1e-9) {
              failed = true;
              break;
            }
          }
          if (failed) break;
        }
      }

      // (c) corrected-reward consistency for the regularized runs.
      if (lambda > 0.0 && !failed) {
        auto [lo_b, hi_b] = mdp.return_bounds();
        const std::vector<double> grid = make_grid(lo_b, hi_b, lo.atoms);
        const Policy pi0 = Policy::uniform(S, A);
        const DistTable z =
            distributional_policy_evaluation(mdp, pi0, grid, tol);
        const DistTable qf = floor_table(z, lo.entropy_floor);
        const DistTable mu = build_mu_table(mdp, z, pi0, lo.epsilon, lo.mu_mode);
        const QTable bonus = build_entropy_bonus(
            mdp, mu, qf, lambda, default_entropy_bound(lo.atoms));

        TabularMDP corrected = mdp;
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < A; ++a) {
            corrected.r(s, a) =
                RewardModel(mdp.r(s, a).mean() + bonus.at(s, a));
          }
        }
        const double eval_tol = 1e-10;
        const QTable via_der = policy_evaluation_with_bonus(
            mdp, res.policy, bonus, eval_tol);
        const QTable via_plain = policy_evaluation(
            corrected, res.policy, BackupKind::plain, eval_tol);
        const double diff = via_der.sup_diff(via_plain);
        rep.worst_margin = std::max(rep.worst_margin, diff - 10.0 * eval_tol);
        if (diff > 10.0 * eval_tol) failed = true;
      }
      if (failed) break;
    }
    if (failed) ++rep.failures;
  }
  return rep;
}

std::vector<PropertyReport> run_all_checks(std::uint64_t seed) {
  return {
      check_decomposed_ce_identity(1000, seed),
      check_expectation_contraction(500, seed + 1),
      check_kl_nonexpansion(500, seed + 2),
      check_pinsker_and_w1(1000, seed + 3),
      check_decomposition_bound(1000, seed + 4),
      check_derpi(100, seed + 5),
  };
}

void print_report_table(std::span<const PropertyReport> reports,
                        std::ostream& os) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-34s %8s %8s %14s %12s %s\n", "property",
                "trials", "failures", "worst_margin", "seed", "status");
  os << buf;
  for (const PropertyReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-34s %8ld %8ld %14.3e %12llu %s\n",
                  r.property.c_str(), r.trials, r.failures, r.worst_margin,
                  static_cast<unsigned long long>(r.seed),
                  r.passed() ? "PASS" : "FAIL");
    os << buf;
  }
}

std::string reports_to_csv(std::span<const PropertyReport> reports) {
  std::string out = "property,trials,failures,worst_margin,seed\n";
  char buf[160];
  for (const PropertyReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%ld,%ld,%.12g,%llu\n",
                  r.property.c_str(), r.trials, r.failures, r.worst_margin,
                  static_cast<unsigned long long>(r.seed));
    out += buf;
  }
  return out;
}

void write_report_csv(std::span<const PropertyReport> reports,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_report_csv: cannot open " + path.string());
  out << reports_to_csv(reports);
}

}  // namespace derl
