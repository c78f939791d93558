#include "derl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "derl/errors.hpp"

namespace derl {

namespace {

TabularMDP blank_mdp(int n_states, int n_actions, double gamma) {
  TabularMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.transition.assign(
      static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  m.reward.assign(static_cast<std::size_t>(n_states) * n_actions,
                  RewardModel(0.0));
  m.terminal.assign(n_states, 0);
  return m;
}

void make_absorbing(TabularMDP& m, int s) {
  m.terminal[s] = 1;
  for (int a = 0; a < m.n_actions; ++a) {
    for (int s2 = 0; s2 < m.n_states; ++s2) m.p(s, a, s2) = 0.0;
    m.p(s, a, s) = 1.0;
    m.r(s, a) = RewardModel(0.0);
  }
}

}  // namespace

void TabularMDP::validate() const {
  if (n_states <= 0 || n_actions <= 0) {
    throw Error("mdp: state/action counts must be positive");
  }
  if (!(gamma > 0.0) || !(gamma < 1.0)) {
    throw Error("mdp: gamma must lie in (0,1)");
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double row = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double v = p(s, a, s2);
        if (v < 0.0) throw Error("mdp: negative transition probability");
        row += v;
      }
      if (std::abs(row - 1.0) > 1e-12) {
        throw Error("mdp: transition row must sum to 1 within 1e-12");
      }
      if (is_terminal(s) && (p(s, a, s) != 1.0 || r(s, a).mean() != 0.0)) {
        throw Error("mdp: terminal states must self-loop with zero reward");
      }
    }
  }
}

std::pair<double, double> TabularMDP::reward_bounds() const {
  double lo = 0.0, hi = 0.0;
  for (const auto& rm : reward) {
    lo = std::min(lo, rm.dist().atoms().front());
    hi = std::max(hi, rm.dist().atoms().back());
  }
  return {lo, hi};
}

std::pair<double, double> TabularMDP::return_bounds() const {
  auto [lo, hi] = reward_bounds();
  return {lo / (1.0 - gamma), hi / (1.0 - gamma)};
}

TabularMDP make_chain(int n, double slip, double gamma) {
  if (n < 2) throw Error("make_chain: need at least 2 states");
  if (!(slip >= 0.0) || !(slip <= 0.5)) {
    throw Error("make_chain: slip must lie in [0, 0.5]");
  }
  TabularMDP m = blank_mdp(n, 2, gamma);
  m.start_state = 0;
  const int right_end = n - 1;
  for (int s = 0; s < right_end; ++s) {
    const int left_to = std::max(s - 1, 0);
    const int right_to = s + 1;
    // action 0 = left, action 1 = right; slip swaps the direction.
    m.p(s, 0, left_to) += 1.0 - slip;
    m.p(s, 0, right_to) += slip;
    m.p(s, 1, right_to) += 1.0 - slip;
    m.p(s, 1, left_to) += slip;
    if (s == 0) m.r(s, 0) = RewardModel(0.01);
    if (s == right_end - 1) m.r(s, 1) = RewardModel(1.0);
  }
  make_absorbing(m, right_end);
  m.validate();
  return m;
}

TabularMDP make_risky_chain(int n, double slip, double gamma, double spread) {
  if (!(spread > 0.0)) throw Error("make_risky_chain: spread must be positive");
  TabularMDP m = make_chain(n, slip, gamma);
  m.r(n - 2, 1) = RewardModel(
      CategoricalDist({1.0 - spread, 1.0 + spread}, {0.5, 0.5}));
  m.validate();
  return m;
}

TabularMDP make_cliff_grid(int width, int height, double fall_penalty,
                           double gamma) {
  if (width < 3 || height < 2) {
    throw Error("make_cliff_grid: need width >= 3 and height >= 2");
  }
  const int n = width * height;
  TabularMDP m = blank_mdp(n, 4, gamma);
  const auto idx = [width](int x, int y) { return y * width + x; };
  const int start = idx(0, 0);
  const int goal = idx(width - 1, 0);
  m.start_state = start;

  const int dx[4] = {0, 0, -1, 1};  // up, down, left, right
  const int dy[4] = {1, -1, 0, 0};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int s = idx(x, y);
      if (s == goal) continue;  // terminal, handled below
      for (int a = 0; a < 4; ++a) {
        int nx = std::clamp(x + dx[a], 0, width - 1);
        int ny = std::clamp(y + dy[a], 0, height - 1);
        int to = idx(nx, ny);
        const bool into_cliff = (ny == 0 && nx > 0 && nx < width - 1);
        if (into_cliff) {
          m.p(s, a, start) += 1.0;
          m.r(s, a) = RewardModel(fall_penalty);
        } else {
          m.p(s, a, to) += 1.0;
          if (to == goal && s != goal) m.r(s, a) = RewardModel(1.0);
        }
      }
    }
  }
  make_absorbing(m, goal);
  m.validate();
  return m;
}

TabularMDP make_risky_bandit(double mean, double spread) {
  if (!(spread > 0.0)) throw Error("make_risky_bandit: spread must be positive");
  // Episodes last one step, so the discount only scales the return-range
  // bound; 0.5 keeps categorical grids over the bandit tight.
  TabularMDP m = blank_mdp(2, 2, 0.5);
  m.start_state = 0;
  m.p(0, 0, 1) = 1.0;
  m.p(0, 1, 1) = 1.0;
  m.r(0, 0) = RewardModel(mean);  // SAFE
  m.r(0, 1) = RewardModel(        // RISKY: same mean, spread^2 variance
      CategoricalDist({mean - spread, mean + spread}, {0.5, 0.5}));
  make_absorbing(m, 1);
  m.validate();
  return m;
}

std::tuple<double, int, bool> sample_transition(const TabularMDP& mdp, int s,
                                                int a, Rng& rng) {
  if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions) {
    throw InvalidStateActionError("sample_transition: (s,a) out of range");
  }
  if (mdp.is_terminal(s)) return {0.0, s, true};

  const double u = rng.uniform();
  int next = mdp.n_states - 1;
  double acc = 0.0;
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    acc += mdp.p(s, a, s2);
    if (u < acc) {
      next = s2;
      break;
    }
  }
  const double r = mdp.r(s, a).sample(rng);
  return {r, next, mdp.is_terminal(next)};
}

std::string TabularMDP::to_text() const {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "states %d actions %d gamma %.17g\n",
                n_states, n_actions, gamma);
  out += buf;
  std::snprintf(buf, sizeof(buf), "start %d\n", start_state);
  out += buf;
  out += "terminal :";
  for (int s = 0; s < n_states; ++s) {
    if (is_terminal(s)) {
      std::snprintf(buf, sizeof(buf), " %d", s);
      out += buf;
    }
  }
  out += "\n";
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      std::snprintf(buf, sizeof(buf), "P %d %d :", s, a);
      out += buf;
      for (int s2 = 0; s2 < n_states; ++s2) {
        std::snprintf(buf, sizeof(buf), " %.17g", p(s, a, s2));
        out += buf;
      }
      out += "\n";
    }
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const RewardModel& rm = r(s, a);
      if (rm.deterministic()) {
        std::snprintf(buf, sizeof(buf), "R %d %d : %.17g\n", s, a,
                      rm.dist().atoms()[0]);
        out += buf;
      } else {
        std::snprintf(buf, sizeof(buf), "R %d %d : dist", s, a);
        out += buf;
        for (double v : rm.dist().atoms()) {
          std::snprintf(buf, sizeof(buf), " %.17g", v);
          out += buf;
        }
        out += " |";
        for (double v : rm.dist().probs()) {
          std::snprintf(buf, sizeof(buf), " %.17g", v);
          out += buf;
        }
        out += "\n";
      }
    }
  }
  return out;
}

TabularMDP TabularMDP::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("mdp record: empty input");

  TabularMDP m;
  {
    std::istringstream h(line);
    std::string k1, k2, k3;
    if (!(h >> k1 >> m.n_states >> k2 >> m.n_actions >> k3 >> m.gamma) ||
        k1 != "states" || k2 != "actions" || k3 != "gamma") {
      throw IoError("mdp record: bad header line");
    }
  }
  m = [&] {
    TabularMDP fresh = blank_mdp(m.n_states, m.n_actions, m.gamma);
    return fresh;
  }();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "start") {
      ls >> m.start_state;
    } else if (tag == "terminal") {
      std::string colon;
      ls >> colon;
      int s;
      while (ls >> s) m.terminal.at(s) = 1;
    } else if (tag == "P") {
      int s, a;
      std::string colon;
      ls >> s >> a >> colon;
      for (int s2 = 0; s2 < m.n_states; ++s2) {
        if (!(ls >> m.p(s, a, s2))) {
          throw IoError("mdp record: short P row");
        }
      }
    } else if (tag == "R") {
      int s, a;
      std::string colon, word;
      ls >> s >> a >> colon;
      const auto pos = ls.tellg();
      ls >> word;
      if (word == "dist") {
        std::vector<double> atoms, probs;
        double v;
        std::string rest;
        std::getline(ls, rest);
        const auto bar = rest.find('|');
        if (bar == std::string::npos) {
          throw IoError("mdp record: stochastic reward missing '|'");
        }
        std::istringstream as(rest.substr(0, bar)), ps(rest.substr(bar + 1));
        while (as >> v) atoms.push_back(v);
        while (ps >> v) probs.push_back(v);
        m.r(s, a) = RewardModel(CategoricalDist(atoms, probs));
      } else {
        ls.clear();
        ls.seekg(pos);
        double v;
        if (!(ls >> v)) throw IoError("mdp record: bad R line");
        m.r(s, a) = RewardModel(v);
      }
    } else {
      throw IoError("mdp record: unknown line tag '" + tag + "'");
    }
  }
  m.validate();
  return m;
}

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_mdp: cannot open " + path.string());
  out << mdp.to_text();
}

TabularMDP load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_mdp: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return TabularMDP::from_text(buf.str());
}

}  // namespace derl
