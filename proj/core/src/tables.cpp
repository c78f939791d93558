#include "derl/tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace derl {

double QTable::sup_diff(const QTable& other) const {
  if (n_states_ != other.n_states_ || n_actions_ != other.n_actions_) {
    throw ShapeMismatchError("QTable::sup_diff: shape mismatch");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < q_.size(); ++i) {
    d = std::max(d, std::abs(q_[i] - other.q_[i]));
  }
  return d;
}

std::string QTable::to_text() const {
  std::string out;
  char buf[64];
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      std::snprintf(buf, sizeof(buf), "Q %d %d : %.17g\n", s, a, at(s, a));
      out += buf;
    }
  }
  return out;
}

Policy Policy::deterministic(const std::vector<int>& actions, int n_actions) {
  Policy pi(static_cast<int>(actions.size()), n_actions, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    pi.at(static_cast<int>(s), actions[s]) = 1.0;
  }
  return pi;
}

int Policy::mode_action(int s) const {
  int best = 0;
  for (int a = 1; a < n_actions_; ++a) {
    if (at(s, a) > at(s, best)) best = a;
  }
  return best;
}

void Policy::validate() const {
  for (int s = 0; s < n_states_; ++s) {
    double row = 0.0;
    for (int a = 0; a < n_actions_; ++a) {
      if (at(s, a) < 0.0) throw Error("policy: negative probability");
      row += at(s, a);
    }
    if (std::abs(row - 1.0) > 1e-12) {
      throw Error("policy: row must sum to 1 within 1e-12");
    }
  }
}

DistTable::DistTable(int n_states, int n_actions, const CategoricalDist& fill)
    : n_states_(n_states), n_actions_(n_actions) {
  z_.reserve(static_cast<std::size_t>(n_states) * n_actions);
  for (int i = 0; i < n_states * n_actions; ++i) z_.push_back(fill);
}

bool DistTable::shared_grid() const {
  for (std::size_t i = 1; i < z_.size(); ++i) {
    if (!z_[i].same_grid(z_[0])) return false;
  }
  return true;
}

QTable DistTable::expectations() const {
  QTable q(n_states_, n_actions_);
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      q.at(s, a) = expectation(at(s, a));
    }
  }
  return q;
}

double DistTable::sup_tv(const DistTable& other) const {
  if (n_states_ != other.n_states_ || n_actions_ != other.n_actions_) {
    throw ShapeMismatchError("DistTable::sup_tv: shape mismatch");
  }
  double d = 0.0;
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      d = std::max(d, total_variation(at(s, a), other.at(s, a)));
    }
  }
  return d;
}

std::string DistTable::to_text() const {
  std::string out;
  char buf[64];
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      std::snprintf(buf, sizeof(buf), "Z %d %d :", s, a);
      out += buf;
      for (double v : at(s, a).atoms()) {
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        out += buf;
      }
      out += " |";
      for (double v : at(s, a).probs()) {
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        out += buf;
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<double> make_grid(double lo, double hi, int atoms) {
  if (atoms < 1) throw Error("make_grid: need at least one atom");
  if (atoms == 1) return {lo};
  if (!(hi > lo)) throw Error("make_grid: hi must exceed lo");
  std::vector<double> g(atoms);
  const double dz = (hi - lo) / (atoms - 1);
  for (int i = 0; i < atoms; ++i) g[i] = lo + dz * i;
  g.back() = hi;
  return g;
}

}  // namespace derl
