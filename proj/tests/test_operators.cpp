#include <doctest.h>

#include <cmath>

#include "derl/operators.hpp"
#include "oracles.hpp"

using namespace derl;

namespace {

/// Single-state, single-action MDP with reward r and discount gamma.
TabularMDP loop_mdp(double r, double gamma) {
  TabularMDP m;
  m.n_states = 1;
  m.n_actions = 1;
  m.gamma = gamma;
  m.transition = {1.0};
  m.reward = {RewardModel(r)};
  m.terminal = {0};
  return m;
}

TabularMDP random_mdp(Rng& rng, int S, int A) {
  TabularMDP m;
  m.n_states = S;
  m.n_actions = A;
  m.gamma = rng.uniform(0.5, 0.95);
  m.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  m.terminal.assign(S, 0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double row = 0.0;
      for (int s2 = 0; s2 < S; ++s2) row += (m.p(s, a, s2) = 0.05 + rng.uniform());
      for (int s2 = 0; s2 < S; ++s2) m.p(s, a, s2) /= row;
      m.reward.push_back(RewardModel(rng.uniform(-1.0, 1.0)));
    }
  }
  return m;
}

Policy random_policy(Rng& rng, int S, int A) {
  Policy pi(S, A, 0.0);
  for (int s = 0; s < S; ++s) {
    double row = 0.0;
    for (int a = 0; a < A; ++a) row += (pi.at(s, a) = 0.05 + rng.uniform());
    for (int a = 0; a < A; ++a) pi.at(s, a) /= row;
  }
  return pi;
}

DistTable random_table(Rng& rng, int S, int A, const std::vector<double>& grid,
                       double floor) {
  DistTable z(S, A, CategoricalDist::uniform(grid));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      std::vector<double> p(grid.size());
      double total = 0.0;
      for (double& v : p) total += (v = floor + rng.uniform());
      for (double& v : p) v /= total;
      z.at(s, a) = CategoricalDist(grid, p);
    }
  }
  return z;
}

}  // namespace

TEST_CASE("bellman backup") {
  const TabularMDP m = loop_mdp(1.0, 0.5);
  const Policy pi = Policy::uniform(1, 1);

  QTable q(1, 1, 0.0);
  q = bellman_backup(m, q, pi);
  CHECK(q.at(0, 0) == doctest::Approx(1.0));

  // Fixed point is the geometric series 1/(1-gamma) = 2.
  QTable fp(1, 1, 2.0);
  const QTable next = bellman_backup(m, fp, pi);
  CHECK(next.at(0, 0) == doctest::Approx(2.0).epsilon(1e-14));

  CHECK_THROWS_AS(bellman_backup(m, QTable(2, 1), pi), ShapeMismatchError);
}

TEST_CASE("iterated backup matches the linear-solve oracle") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const TabularMDP m = random_mdp(rng, 4, 2);
    const Policy pi = random_policy(rng, 4, 2);
    QTable q(4, 2, 0.0);
    for (int k = 0; k < 200; ++k) q = bellman_backup(m, q, pi);
    const QTable want = oracles::policy_q_linear(m, pi);
    CHECK(q.sup_diff(want) < 1e-8);
  }
}

TEST_CASE("optimality backup") {
  const TabularMDP single = loop_mdp(0.3, 0.7);
  const Policy pi = Policy::uniform(1, 1);
  QTable q(1, 1, 0.4);
  CHECK(bellman_optimality_backup(single, q).at(0, 0) ==
        doctest::Approx(bellman_backup(single, q, pi).at(0, 0)));

  const TabularMDP chain = make_chain(5, 0.0, 0.9);
  const QTable fixed = value_iteration(chain, 1e-12);
  double best = fixed.at(0, 0);
  for (int a = 1; a < chain.n_actions; ++a) best = std::max(best, fixed.at(0, a));
  CHECK(best == doctest::Approx(0.729).epsilon(1e-10));
}

TEST_CASE("value iteration output is self-consistent under its backup") {
  Rng rng(121);
  for (int t = 0; t < 10; ++t) {
    const TabularMDP m = random_mdp(rng, 4, 3);
    const double tol = 1e-10;
    const QTable q = value_iteration(m, tol);
    CHECK(bellman_optimality_backup(m, q).sup_diff(q) < tol);
  }
}

TEST_CASE("optimality backup is monotone (property)") {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const TabularMDP m = random_mdp(rng, 3, 2);
    QTable q1(3, 2), q2(3, 2);
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        q1.at(s, a) = rng.uniform(-1.0, 1.0);
        q2.at(s, a) = q1.at(s, a) + rng.uniform();  // q2 >= q1
      }
    }
    const QTable b1 = bellman_optimality_backup(m, q1);
    const QTable b2 = bellman_optimality_backup(m, q2);
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        CHECK(b1.at(s, a) <= b2.at(s, a) + 1e-12);
      }
    }
  }
}

TEST_CASE("distributional backup") {
  SUBCASE("point mass maps affinely") {
    const TabularMDP m = loop_mdp(1.0, 0.5);
    const Policy pi = Policy::uniform(1, 1);
    DistTable z(1, 1, CategoricalDist::point(0.0));
    const DistTable out = distributional_backup(m, z, pi, false);
    CHECK(out.at(0, 0).size() == 1);
    CHECK(out.at(0, 0).atoms()[0] == doctest::Approx(1.0));
  }

  SUBCASE("risky bandit one-step return") {
    const TabularMDP m = make_risky_bandit(1.0, 1.0);
    const Policy pi = Policy::uniform(2, 2);
    DistTable z(2, 2, CategoricalDist::point(0.0));
    const DistTable out = distributional_backup(m, z, pi, false);
    const CategoricalDist& risky = out.at(0, 1);
    REQUIRE(risky.size() == 2);
    CHECK(risky.atoms()[0] == doctest::Approx(0.0));
    CHECK(risky.atoms()[1] == doctest::Approx(2.0));
    CHECK(risky.probs()[0] == doctest::Approx(0.5));
    CHECK(risky.probs()[1] == doctest::Approx(0.5));
  }

  SUBCASE("expectations commute with the scalar backup") {
    Rng rng(13);
    const std::vector<double> grid = make_grid(-1.0, 2.0, 5);
    for (int t = 0; t < 30; ++t) {
      const TabularMDP m = random_mdp(rng, 3, 2);
      const Policy pi = random_policy(rng, 3, 2);
      const DistTable z = random_table(rng, 3, 2, grid, 0.0);
      // Exact: equality to rounding.
      const DistTable exact = distributional_backup(m, z, pi, false);
      CHECK(exact.expectations().sup_diff(
                bellman_backup(m, z.expectations(), pi)) < 1e-12);
      // Projected: within one atom spacing.
      const DistTable proj = distributional_backup(m, z, pi, true);
      const double spacing = grid[1] - grid[0];
      CHECK(proj.expectations().sup_diff(
                bellman_backup(m, z.expectations(), pi)) <= spacing + 1e-12);
    }
  }
}

TEST_CASE("f transform") {
  CHECK(f_transform(3.7, 0.0, 0.5) == 0.0);
  CHECK(f_transform(1.0, 0.25, 0.5) == doctest::Approx(1.0));
  CHECK(f_transform(0.0, 0.9, 0.3) == 0.0);
  CHECK_THROWS_AS(f_transform(-0.1, 0.5, 0.9), NegativeEntropyError);

  // Monotone nondecreasing in H.
  double prev = 0.0;
  for (double h = 0.0; h < 5.0; h += 0.25) {
    const double v = f_transform(h, 0.7, 0.9);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("entropy-corrected backup") {
  Rng rng(14);
  const TabularMDP m = random_mdp(rng, 3, 2);
  const Policy pi = random_policy(rng, 3, 2);
  const std::vector<double> grid{0.0, 1.0, 2.0};
  const DistTable z = random_table(rng, 3, 2, grid, 1e-3);
  const DistTable mu = random_table(rng, 3, 2, grid, 0.0);
  QTable q(3, 2);
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) q.at(s, a) = rng.uniform(-1.0, 1.0);
  }

  SUBCASE("lambda = 0 is bitwise-equal to the plain backup") {
    EntropyRegularizer reg{&mu, &z, 0.0, 100.0};
    const QTable der = der_bellman_backup(m, q, pi, reg);
    const QTable plain = bellman_backup(m, q, pi);
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        CHECK(der.at(s, a) == plain.at(s, a));
      }
    }
  }

  SUBCASE("mu = q reduces the correction to gamma f(entropy)") {
    EntropyRegularizer reg{&z, &z, 0.5, 100.0};
    const QTable der = der_bellman_backup(m, q, pi, reg);
    const QTable plain = bellman_backup(m, q, pi);
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        const double want =
            m.gamma * f_transform(entropy(z.at(s, a)), 0.5, m.gamma);
        CHECK(der.at(s, a) - plain.at(s, a) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }

  SUBCASE("hand-built correction: H=1, lambda=0.25, gamma=0.5 adds 0.5") {
    // One state, one action, deterministic reward; choose mu/q with H = 1.
    TabularMDP one = loop_mdp(1.0, 0.5);
    const std::vector<double> g2{0.0, 1.0};
    // H(mu, q) = -ln q_0 = 1  =>  q_0 = exp(-1).
    const double q0 = std::exp(-1.0);
    DistTable qd(1, 1, CategoricalDist(g2, {q0, 1.0 - q0}));
    DistTable mud(1, 1, CategoricalDist(g2, {1.0, 0.0}));
    QTable zero(1, 1, 0.0);
    EntropyRegularizer reg{&mud, &qd, 0.25, 100.0};
    const QTable der = der_bellman_backup(one, zero, Policy::uniform(1, 1), reg);
    // r + gamma*f(1) = 1 + 0.5 * (sqrt(0.25)/0.5) = 1.5: correction 0.5.
    CHECK(der.at(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  }

  SUBCASE("entropy bound is enforced") {
    EntropyRegularizer reg{&mu, &z, 0.5, 1e-6};
    CHECK_THROWS_AS(der_bellman_backup(m, q, pi, reg), EntropyUnboundedError);
  }
}

TEST_CASE("policy evaluation") {
  const TabularMDP m = loop_mdp(1.0, 0.5);
  const Policy pi = Policy::uniform(1, 1);
  const QTable q = policy_evaluation(m, pi, BackupKind::plain, 1e-12);
  CHECK(q.at(0, 0) == doctest::Approx(2.0).epsilon(1e-10));

  SUBCASE("der with lambda = 0 equals plain exactly") {
    Rng rng(15);
    const TabularMDP rm = random_mdp(rng, 4, 2);
    const Policy rp = random_policy(rng, 4, 2);
    EntropyRegularizer reg;
    reg.lambda = 0.0;
    const QTable a = policy_evaluation(rm, rp, BackupKind::der, 1e-11, &reg);
    const QTable b = policy_evaluation(rm, rp, BackupKind::plain, 1e-11);
    CHECK(a.sup_diff(b) == 0.0);
  }

  SUBCASE("matches the linear-solve oracle") {
    Rng rng(16);
    for (int t = 0; t < 20; ++t) {
      TabularMDP rm = random_mdp(rng, 4, 2);
      // Fixed-point error after a sup-change-below-tol stop is bounded by
      // gamma/(1-gamma) * tol, so keep gamma/(1-gamma) under 10.
      rm.gamma = std::min(rm.gamma, 0.9);
      const Policy rp = random_policy(rng, 4, 2);
      const double tol = 1e-10;
      const QTable q_iter = policy_evaluation(rm, rp, BackupKind::plain, tol);
      const QTable q_lin = oracles::policy_q_linear(rm, rp);
      CHECK(q_iter.sup_diff(q_lin) < 10.0 * tol);
    }
  }
}

TEST_CASE("policy improvement") {
  QTable q(2, 2);
  q.at(0, 0) = 0.0;
  q.at(0, 1) = 1.0;
  q.at(1, 0) = 1.0;
  q.at(1, 1) = 1.0;  // tie breaks to action 0
  const Policy pi = policy_improvement(q);
  CHECK(pi.at(0, 1) == 1.0);
  CHECK(pi.at(1, 0) == 1.0);

  SUBCASE("one improvement step never decreases Q (oracle-evaluated)") {
    Rng rng(17);
    for (int t = 0; t < 30; ++t) {
      const TabularMDP m = random_mdp(rng, 4, 2);
      const Policy base = random_policy(rng, 4, 2);
      const QTable qb = oracles::policy_q_linear(m, base);
      const Policy better = policy_improvement(qb);
      const QTable qi = oracles::policy_q_linear(m, better);
      for (int s = 0; s < 4; ++s) {
        for (int a = 0; a < 2; ++a) {
          CHECK(qi.at(s, a) >= qb.at(s, a) - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("derpi") {
  SUBCASE("one-state one-action terminates with trace length 1") {
    const TabularMDP m = loop_mdp(0.5, 0.8);
    DerpiOptions opts;
    opts.lambda = 0.0;
    const DerpiResult res = derpi(m, opts);
    CHECK(res.trace.size() == 1);
    CHECK(res.policy.at(0, 0) == 1.0);
  }

  SUBCASE("lambda = 0 recovers the enumerated optimal policy") {
    Rng rng(18);
    for (int t = 0; t < 25; ++t) {
      const TabularMDP m = random_mdp(rng, 4, 3);
      DerpiOptions opts;
      opts.lambda = 0.0;
      opts.tol = 1e-12;
      const DerpiResult res = derpi(m, opts);
      const Policy oracle = oracles::enumerate_optimal(m);
      CHECK(res.policy == oracle);
    }
  }

  SUBCASE("trace is monotone per (s,a)") {
    Rng rng(19);
    for (int t = 0; t < 10; ++t) {
      const TabularMDP m = random_mdp(rng, 5, 2);
      for (const double lambda : {0.0, 0.3, 0.7}) {
        DerpiOptions opts;
        opts.lambda = lambda;
        opts.tol = 1e-12;
        opts.atoms = 31;
        const DerpiResult res = derpi(m, opts);
        for (std::size_t i = 0; i + 1 < res.trace.size(); ++i) {
          for (int s = 0; s < m.n_states; ++s) {
            for (int a = 0; a < m.n_actions; ++a) {
              CHECK(res.trace[i + 1].at(s, a) >= res.trace[i].at(s, a) - 1e-9);
            }
          }
        }
      }
    }
  }

  SUBCASE("per-iteration regularizer refresh still converges") {
    Rng rng(122);
    const TabularMDP m = random_mdp(rng, 4, 2);
    DerpiOptions opts;
    opts.lambda = 0.4;
    opts.tol = 1e-10;
    opts.atoms = 31;
    opts.refresh_each_iteration = true;
    const DerpiResult res = derpi(m, opts);
    CHECK(res.iterations >= 1);
    res.policy.validate();
  }

  SUBCASE("risky bandit ranks the dispersed action higher when lambda > 0") {
    const TabularMDP m = make_risky_bandit(1.0, 1.0);
    DerpiOptions opts;
    opts.lambda = 0.5;
    opts.tol = 1e-12;
    opts.atoms = 41;  // return range [0,4]: bandit outcomes land on atoms
    const DerpiResult res = derpi(m, opts);
    CHECK(res.q.at(0, 1) > res.q.at(0, 0));  // RISKY above SAFE

    // Hand-composed corrected values: Q = mean + sqrt(lambda * H).
    auto [lo, hi] = m.return_bounds();
    const std::vector<double> grid = make_grid(lo, hi, opts.atoms);
    const Policy pi0 = Policy::uniform(2, 2);
    const DistTable z = distributional_policy_evaluation(m, pi0, grid, 1e-12);
    const DistTable qf = floor_table(z, opts.entropy_floor);
    const DistTable mu = build_mu_table(m, z, pi0, opts.epsilon, opts.mu_mode);
    for (int a = 0; a < 2; ++a) {
      const double h = cross_entropy(mu.at(0, a), qf.at(0, a));
      const double want = m.r(0, a).mean() + std::sqrt(opts.lambda * h);
      CHECK(res.q.at(0, a) == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("soft policy iteration") {
  SUBCASE("beta = 0 matches plain policy iteration") {
    Rng rng(20);
    for (int t = 0; t < 10; ++t) {
      const TabularMDP m = random_mdp(rng, 4, 2);
      const auto [pi, q] = soft_policy_iteration(m, 0.0, 1e-10);
      const Policy oracle = oracles::enumerate_optimal(m);
      CHECK(pi == oracle);
    }
  }

  SUBCASE("large beta drives the policy toward uniform") {
    const TabularMDP m = make_risky_bandit(1.0, 1.0);
    const auto [pi, q] = soft_policy_iteration(m, 1e4, 1e-10);
    CHECK(pi.at(0, 0) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(pi.at(0, 1) == doctest::Approx(0.5).epsilon(1e-3));
  }

  SUBCASE("two-action bandit at beta = 1 lands on the closed-form softmax") {
    // Build a bandit with Q = [0, 1]: rewards 0 and 1 into a terminal state.
    TabularMDP m;
    m.n_states = 2;
    m.n_actions = 2;
    m.gamma = 0.9;
    m.transition.assign(8, 0.0);
    m.p(0, 0, 1) = 1.0;
    m.p(0, 1, 1) = 1.0;
    m.p(1, 0, 1) = 1.0;
    m.p(1, 1, 1) = 1.0;
    m.reward = {RewardModel(0.0), RewardModel(1.0), RewardModel(0.0),
                RewardModel(0.0)};
    m.terminal = {0, 1};

    const auto [pi, q] = soft_policy_iteration(m, 1.0, 1e-12);
    const double z = 1.0 + std::exp(1.0);
    CHECK(pi.at(0, 0) == doctest::Approx(1.0 / z).epsilon(1e-6));
    CHECK(pi.at(0, 1) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-6));
    CHECK(pi.at(0, 1) == doctest::Approx(0.7311).epsilon(1e-3));
  }
}

TEST_CASE("distributional value iteration") {
  SUBCASE("chain start value within one atom of 0.729") {
    const TabularMDP m = make_chain(5, 0.0, 0.9);
    auto [lo, hi] = m.return_bounds();
    const std::vector<double> grid = make_grid(lo, hi, 101);
    const DistTable z = distributional_value_iteration(m, grid, 1e-10);
    const QTable q = value_iteration(m, 1e-12);
    const double spacing = grid[1] - grid[0];
    CHECK(z.expectations().sup_diff(q) <= spacing + 1e-9);
  }

  SUBCASE("deterministic MDP concentrates near a point mass") {
    const TabularMDP m = make_chain(4, 0.0, 0.9);
    auto [lo, hi] = m.return_bounds();
    const std::vector<double> grid = make_grid(lo, hi, 401);
    const DistTable z = distributional_value_iteration(m, grid, 1e-10);
    const QTable q = value_iteration(m, 1e-12);
    // Each entry sits within one atom of a point mass at Q in transport
    // distance (repeated projection smears a thin tail, so per-atom
    // support checks are the wrong formulation).
    const double spacing = grid[1] - grid[0];
    for (int s = 0; s < m.n_states; ++s) {
      for (int a = 0; a < m.n_actions; ++a) {
        const double w1 =
            wasserstein(z.at(s, a), CategoricalDist::point(q.at(s, a)), 1);
        CHECK(w1 <= spacing + 1e-9);
      }
    }
  }
}

TEST_CASE("trace csv format") {
  QTable q(1, 2);
  q.at(0, 0) = 0.25;
  q.at(0, 1) = -1.5;
  const std::string csv = trace_to_csv({q});
  CHECK(csv.find("iter,s,a,q\n") == 0);
  CHECK(csv.find("0,0,0,0.25") != std::string::npos);
  CHECK(csv.find("0,0,1,-1.5") != std::string::npos);
}

TEST_CASE("table text dumps mirror the mdp format") {
  QTable q(1, 2);
  q.at(0, 0) = 0.5;
  q.at(0, 1) = 2.0;
  const std::string qt = q.to_text();
  CHECK(qt.find("Q 0 0 : 0.5") != std::string::npos);
  CHECK(qt.find("Q 0 1 : 2") != std::string::npos);

  DistTable z(1, 1, CategoricalDist({0.0, 1.0}, {0.25, 0.75}));
  const std::string zt = z.to_text();
  CHECK(zt.find("Z 0 0 :") == 0);
  CHECK(zt.find("|") != std::string::npos);
  CHECK(zt.find("0.25") != std::string::npos);
}
