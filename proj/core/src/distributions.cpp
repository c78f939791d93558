#include "derl/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace derl {

namespace {

constexpr double kMassTol = 1e-9;

void validate_categorical(const std::vector<double>& atoms,
                          const std::vector<double>& probs) {
  if (atoms.empty() || atoms.size() != probs.size()) {
    throw Error("categorical: atoms/probs must be nonempty and equal length");
  }
  for (std::size_t i = 1; i < atoms.size(); ++i) {
    if (!(atoms[i] > atoms[i - 1])) {
      throw Error("categorical: atoms must be strictly ascending");
    }
  }
  double mass = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error("categorical: probs must be nonnegative and finite");
    }
    mass += p;
  }
  if (std::abs(mass - 1.0) > kMassTol) {
    throw Error("categorical: probs must sum to 1 within 1e-9");
  }
}

std::vector<double> parse_number_line(std::string_view line,
                                      std::string_view tag) {
  auto colon = line.find(':');
  if (colon == std::string_view::npos ||
      line.substr(0, colon) != tag) {
    throw IoError("categorical record: expected '" + std::string(tag) +
                  ":' line");
  }
  std::istringstream in{std::string(line.substr(colon + 1))};
  std::vector<double> out;
  double v = 0.0;
  while (in >> v) out.push_back(v);
  return out;
}

}  // namespace

CategoricalDist::CategoricalDist(std::vector<double> atoms,
                                 std::vector<double> probs)
    : atoms_(std::move(atoms)), probs_(std::move(probs)) {
  validate_categorical(atoms_, probs_);
}

CategoricalDist CategoricalDist::point(double atom) {
  return CategoricalDist({atom}, {1.0});
}

CategoricalDist CategoricalDist::delta(std::vector<double> atoms,
                                       std::size_t index) {
  std::vector<double> probs(atoms.size(), 0.0);
  probs.at(index) = 1.0;
  return CategoricalDist(std::move(atoms), std::move(probs));
}

CategoricalDist CategoricalDist::uniform(std::vector<double> atoms) {
  std::vector<double> probs(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
  return CategoricalDist(std::move(atoms), std::move(probs));
}

std::string CategoricalDist::to_text() const {
  std::string out = "atoms:";
  char buf[32];
  for (double a : atoms_) {
    std::snprintf(buf, sizeof(buf), " %.17g", a);
    out += buf;
  }
  out += "\nprobs:";
  for (double p : probs_) {
    std::snprintf(buf, sizeof(buf), " %.17g", p);
    out += buf;
  }
  out += "\n";
  return out;
}

CategoricalDist CategoricalDist::from_text(std::string_view text) {
  auto nl = text.find('\n');
  if (nl == std::string_view::npos) {
    throw IoError("categorical record: expected two lines");
  }
  auto atoms = parse_number_line(text.substr(0, nl), "atoms");
  auto rest = text.substr(nl + 1);
  auto nl2 = rest.find('\n');
  auto probs = parse_number_line(
      nl2 == std::string_view::npos ? rest : rest.substr(0, nl2), "probs");
  return CategoricalDist(std::move(atoms), std::move(probs));
}

QuantileDist::QuantileDist(std::vector<double> fractions,
                           std::vector<double> values)
    : fractions_(std::move(fractions)), values_(std::move(values)) {
  if (fractions_.empty() || fractions_.size() != values_.size()) {
    throw Error("quantile: fractions/values must be nonempty and equal length");
  }
  double prev = 0.0;
  for (double f : fractions_) {
    if (!(f > prev) || f > 1.0) {
      throw Error("quantile: fractions must be strictly ascending in (0,1]");
    }
    prev = f;
  }
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] < values_[i - 1]) {
      throw Error("quantile: values must be nondecreasing");
    }
  }
}

CategoricalDist Decomposition::reconstruct() const {
  std::vector<double> probs(mu.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = epsilon * mu.probs()[i];
  }
  probs[bin] += 1.0 - epsilon;
  return CategoricalDist(mu.atoms(), std::move(probs));
}

double expectation(const CategoricalDist& d) {
  double e = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    e += d.atoms()[i] * d.probs()[i];
  }
  return e;
}

double variance(const CategoricalDist& d) {
  const double e = expectation(d);
  double v = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double c = d.atoms()[i] - e;
    v += c * c * d.probs()[i];
  }
  return v;
}

double entropy(const CategoricalDist& d) {
  double h = 0.0;
  for (double p : d.probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double kl_divergence(const CategoricalDist& p, const CategoricalDist& q) {
  if (!p.same_grid(q)) {
    throw AtomMismatchError("kl_divergence: distributions on different grids");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.probs()[i];
    if (pi <= 0.0) continue;
    const double qi = q.probs()[i];
    if (qi <= 0.0) {
      throw AbsoluteContinuityError(
          "kl_divergence: q has zero mass where p is positive");
    }
    d += pi * std::log(pi / qi);
  }
  return d;
}

double cross_entropy(const CategoricalDist& p, const CategoricalDist& q) {
  if (!p.same_grid(q)) {
    throw AtomMismatchError("cross_entropy: distributions on different grids");
  }
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.probs()[i];
    if (pi <= 0.0) continue;
    const double qi = q.probs()[i];
    if (qi <= 0.0) {
      throw AbsoluteContinuityError(
          "cross_entropy: q has zero mass where p is positive");
    }
    h -= pi * std::log(qi);
  }
  return h;
}

double total_variation(const CategoricalDist& p, const CategoricalDist& q) {
  if (!p.same_grid(q)) {
    throw AtomMismatchError("total_variation: distributions on different grids");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += std::abs(p.probs()[i] - q.probs()[i]);
  }
  return 0.5 * s;
}

double wasserstein(const CategoricalDist& p, const CategoricalDist& q,
                   int order) {
  if (order < 1) throw Error("wasserstein: order must be a positive integer");
  // Inverse CDFs are piecewise constant; integrate |F_p^-1 - F_q^-1|^order
  // exactly over the merged cumulative-probability breakpoints.
  std::vector<double> cp(p.size()), cq(q.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cp[i] = (acc += p.probs()[i]);
  cp.back() = 1.0;
  acc = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) cq[j] = (acc += q.probs()[j]);
  cq.back() = 1.0;

  double integral = 0.0;
  double tau = 0.0;
  std::size_t i = 0, j = 0;
  while (tau < 1.0) {
    const double t = std::min(cp[i], cq[j]);
    const double w = t - tau;
    if (w > 0.0) {
      integral +=
          w * std::pow(std::abs(p.atoms()[i] - q.atoms()[j]), order);
    }
    tau = t;
    if (cp[i] <= t && i + 1 < cp.size()) ++i;
    if (cq[j] <= t && j + 1 < cq.size()) ++j;
  }
  return order == 1 ? integral : std::pow(integral, 1.0 / order);
}

double cramer_distance(const CategoricalDist& p, const CategoricalDist& q) {
  // Work on the union grid; atoms absent from one side carry zero mass.
  std::vector<double> grid;
  grid.reserve(p.size() + q.size());
  std::merge(p.atoms().begin(), p.atoms().end(), q.atoms().begin(),
             q.atoms().end(), std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double fp = 0.0, fq = 0.0, sum = 0.0;
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (i < p.size() && p.atoms()[i] == grid[k]) fp += p.probs()[i++];
    if (j < q.size() && q.atoms()[j] == grid[k]) fq += q.probs()[j++];
    const double d = fp - fq;
    sum += d * d * (grid[k + 1] - grid[k]);
  }
  return std::sqrt(sum);
}

CategoricalDist project_categorical(const CategoricalDist& src,
                                    const std::vector<double>& target_atoms) {
  const std::size_t n = target_atoms.size();
  if (n == 0) throw Error("project_categorical: empty target grid");
  if (n == 1) {
    return CategoricalDist(target_atoms, {1.0});
  }
  const double lo = target_atoms.front();
  const double hi = target_atoms.back();
  const double dz = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((target_atoms[i] - target_atoms[i - 1]) - dz) >
        1e-9 * std::max(1.0, std::abs(dz))) {
      throw Error("project_categorical: target grid must be uniformly spaced");
    }
  }

  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double mass = src.probs()[k];
    if (mass == 0.0) continue;
    const double z = std::clamp(src.atoms()[k], lo, hi);
    const double b = (z - lo) / dz;
    const auto l = static_cast<std::size_t>(
        std::clamp(std::floor(b), 0.0, static_cast<double>(n - 1)));
    const std::size_t u = std::min(l + 1, n - 1);
    // Splitting as (mass - upper) keeps the total mass of each source atom
    // exact in floating point.
    const double to_upper = (u == l) ? 0.0 : mass * (b - static_cast<double>(l));
    out[u] += to_upper;
    out[l] += mass - to_upper;
  }
  return CategoricalDist(target_atoms, std::move(out));
}

std::size_t expectation_bin(const CategoricalDist& d) {
  const double e = expectation(d);
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dist = std::abs(d.atoms()[i] - e);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

Decomposition decompose_exact(const CategoricalDist& p, double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw EpsilonOutOfRangeError("decompose_exact: epsilon must be in (0,1)");
  }
  const double e = expectation(p);
  const std::size_t m = expectation_bin(p);

  std::vector<double> mu(p.size());
  bool clipped = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double point = (i == m) ? 1.0 - epsilon : 0.0;
    mu[i] = (p.probs()[i] - point) / epsilon;
    if (mu[i] < -1e-12) clipped = true;
  }
  if (clipped) {
    // The raw remainder sums to 1, so clipping negatives leaves mass >= 1.
    double mass = 0.0;
    for (double& v : mu) {
      v = std::max(v, 0.0);
      mass += v;
    }
    for (double& v : mu) v /= mass;
  } else {
    for (double& v : mu) v = std::max(v, 0.0);
  }
  return Decomposition{epsilon, e, m,
                       CategoricalDist(p.atoms(), std::move(mu)), clipped};
}

CategoricalDist mix_with_dirac(const CategoricalDist& p, double epsilon) {
  if (!(epsilon >= 0.0) || !(epsilon <= 1.0)) {
    throw EpsilonOutOfRangeError("mix_with_dirac: epsilon must be in [0,1]");
  }
  const std::size_t m = expectation_bin(p);
  std::vector<double> probs(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    probs[i] = epsilon * p.probs()[i];
  }
  probs[m] += 1.0 - epsilon;
  return CategoricalDist(p.atoms(), std::move(probs));
}

double quantile_expectation(const QuantileDist& d) {
  double e = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    e += (d.fractions()[i] - prev) * d.values()[i];
    prev = d.fractions()[i];
  }
  return e;
}

}  // namespace derl
