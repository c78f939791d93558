#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "derl/errors.hpp"

namespace derl {

/// Discrete return distribution: probability masses on a strictly ascending
/// atom grid. Probs are nonnegative and sum to 1 within 1e-9.
class CategoricalDist {
 public:
  CategoricalDist(std::vector<double> atoms, std::vector<double> probs);

  static CategoricalDist point(double atom);
  static CategoricalDist delta(std::vector<double> atoms, std::size_t index);
  static CategoricalDist uniform(std::vector<double> atoms);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return atoms_.size(); }

  /// Exact (bitwise) grid equality. Divergences that need a common grid
  /// require this; implicit re-gridding is never performed.
  bool same_grid(const CategoricalDist& other) const {
    return atoms_ == other.atoms_;
  }

  /// Two-line record: "atoms: ..." / "probs: ...", 17 significant digits.
  std::string to_text() const;
  static CategoricalDist from_text(std::string_view text);

 private:
  std::vector<double> atoms_;
  std::vector<double> probs_;
};

/// Quantile representation: ascending fractions in (0,1] paired with
/// nondecreasing value locations.
class QuantileDist {
 public:
  QuantileDist(std::vector<double> fractions, std::vector<double> values);

  const std::vector<double>& fractions() const { return fractions_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return fractions_.size(); }

 private:
  std::vector<double> fractions_;
  std::vector<double> values_;
};

/// Split of a categorical distribution into a point mass at its expectation
/// bin and a remainder distribution mu:
///   p = (1 - epsilon) * delta_bin + epsilon * mu.
/// `clipped` marks inputs where the exact remainder had negative mass and
/// was clipped-and-renormalized (the identity then holds only approximately).
struct Decomposition {
  double epsilon;
  double expectation;
  std::size_t bin;
  CategoricalDist mu;
  bool clipped;

  /// (1 - epsilon) * delta_bin + epsilon * mu on mu's grid.
  CategoricalDist reconstruct() const;
};

double expectation(const CategoricalDist& d);
double variance(const CategoricalDist& d);

/// -sum p_i ln p_i (bins with p_i = 0 contribute 0).
double entropy(const CategoricalDist& d);

/// sum p_i ln(p_i / q_i) over bins with p_i > 0. Requires a shared grid
/// (AtomMismatchError) and q_i > 0 wherever p_i > 0 (AbsoluteContinuityError).
double kl_divergence(const CategoricalDist& p, const CategoricalDist& q);

/// -sum p_i ln q_i = kl(p, q) + entropy(p). Same error contract as KL.
double cross_entropy(const CategoricalDist& p, const CategoricalDist& q);

/// (1/2) sum |p_i - q_i|, in [0, 1]. Requires a shared grid.
double total_variation(const CategoricalDist& p, const CategoricalDist& q);

/// Exact p-Wasserstein distance between the two discrete laws, computed from
/// the piecewise-constant inverse CDFs. Grids may differ.
double wasserstein(const CategoricalDist& p, const CategoricalDist& q,
                   int order);

/// l2 distance between CDFs weighted by atom gaps:
///   sqrt( sum_i (F_p(z_i) - F_q(z_i))^2 * (z_{i+1} - z_i) ).
/// Distinct grids are first extended to the union of atoms (exact, no
/// projection).
double cramer_distance(const CategoricalDist& p, const CategoricalDist& q);

/// Redistribute mass onto a fixed, uniformly spaced target grid. Each source
/// atom splits linearly between its two neighboring target atoms; mass
/// outside the support is clipped to the boundary atoms. Total mass is
/// preserved; so is the expectation whenever no clipping occurs.
CategoricalDist project_categorical(const CategoricalDist& src,
                                    const std::vector<double>& target_atoms);

/// Index of the atom nearest to expectation(d); ties break to the lower
/// index.
std::size_t expectation_bin(const CategoricalDist& d);

/// Exact remainder decomposition at proportion epsilon in (0,1):
///   mu_i = (p_i - (1-eps) * [i == m]) / eps,  m = expectation_bin(p).
/// Negative remainder mass is clipped to zero and renormalized, with the
/// `clipped` flag set.
Decomposition decompose_exact(const CategoricalDist& p, double epsilon);

/// (1-eps) * delta_m + eps * p on p's grid, m = expectation_bin(p).
/// eps = 1 returns p unchanged; eps = 0 the pure point mass at m.
CategoricalDist mix_with_dirac(const CategoricalDist& p, double epsilon);

/// Mean of a quantile representation using interval weights
/// w_i = tau_i - tau_{i-1} with tau_0 = 0.
double quantile_expectation(const QuantileDist& d);

}  // namespace derl
