#include "derl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

namespace derl {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError("invalid number '" + v + "'", line);
  }
}

long parse_long(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError("invalid integer '" + v + "'", line);
  }
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("invalid boolean '" + v + "'", line);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, int line, F&& one) {
  std::vector<T> out;
  std::string token;
  std::istringstream in(v);
  while (std::getline(in, token, ',')) {
    token = trim(token);
    if (!token.empty()) out.push_back(one(token, line));
  }
  if (out.empty()) throw ParseError("empty list", line);
  return out;
}

void require_range(bool ok, const std::string& what, int line) {
  if (!ok) throw ParseError("value out of range for " + what, line);
}

AgentKind agent_kind_from(const std::string& name) {
  if (name == "fqi") return AgentKind::fqi;
  if (name == "fzi_categorical") return AgentKind::fzi_categorical;
  if (name == "derac") return AgentKind::derac;
  if (name == "ac") return AgentKind::ac;
  if (name == "ac_ve") return AgentKind::ac_ve;
  if (name == "ac_re") return AgentKind::ac_re;
  if (name == "ac_re_ve") return AgentKind::ac_re_ve;
  throw Error("unknown agent '" + name + "'");
}

FziMode fzi_mode_from(const std::string& name) {
  if (name == "vanilla_ce") return FziMode::vanilla_ce;
  if (name == "decomposed") return FziMode::decomposed;
  if (name == "ablation_mix") return FziMode::ablation_mix;
  throw Error("unknown mode '" + name + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  bool in_defaults = false;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line == "[defaults]") {
        in_defaults = true;
        continue;
      }
      throw ParseError("unknown section " + line, line_no);
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected key = value", line_no);
    }
    if (!in_defaults) {
      throw MissingSectionError(
          "config keys must appear under a [defaults] section");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    AgentConfig& a = cfg.agent_cfg;

    if (key == "environment") {
      if (value != "chain" && value != "risky_chain" && value != "cliff" &&
          value != "risky_bandit") {
        throw ParseError("unknown environment '" + value + "'", line_no);
      }
      cfg.environment = value;
    } else if (key == "chain_n") {
      cfg.chain_n = static_cast<int>(parse_long(value, line_no));
      require_range(cfg.chain_n >= 2, key, line_no);
    } else if (key == "slip") {
      cfg.slip = parse_double(value, line_no);
      require_range(cfg.slip >= 0.0 && cfg.slip <= 0.5, key, line_no);
    } else if (key == "reward_spread") {
      cfg.reward_spread = parse_double(value, line_no);
      require_range(cfg.reward_spread > 0.0, key, line_no);
    } else if (key == "width") {
      cfg.width = static_cast<int>(parse_long(value, line_no));
      require_range(cfg.width >= 3, key, line_no);
    } else if (key == "height") {
      cfg.height = static_cast<int>(parse_long(value, line_no));
      require_range(cfg.height >= 2, key, line_no);
    } else if (key == "fall_penalty") {
      cfg.fall_penalty = parse_double(value, line_no);
    } else if (key == "bandit_mean") {
      cfg.bandit_mean = parse_double(value, line_no);
    } else if (key == "bandit_spread") {
      cfg.bandit_spread = parse_double(value, line_no);
      require_range(cfg.bandit_spread > 0.0, key, line_no);
    } else if (key == "agent") {
      try {
        agent_kind_from(value);
      } catch (const Error&) {
        throw ParseError("unknown agent '" + value + "'", line_no);
      }
      cfg.agent = value;
    } else if (key == "mode") {
      try {
        fzi_mode_from(value);
      } catch (const Error&) {
        throw ParseError("unknown mode '" + value + "'", line_no);
      }
      cfg.mode = value;
    } else if (key == "mix_epsilon") {
      cfg.mix_epsilon = parse_double(value, line_no);
      require_range(cfg.mix_epsilon >= 0.0 && cfg.mix_epsilon <= 1.0, key,
                    line_no);
    } else if (key == "epsilon") {
      a.epsilon = parse_double(value, line_no);
      require_range(a.epsilon > 0.0 && a.epsilon < 1.0, key, line_no);
    } else if (key == "lambda") {
      a.lambda = parse_double(value, line_no);
      require_range(a.lambda >= 0.0 && a.lambda <= 1.0, key, line_no);
    } else if (key == "beta") {
      a.beta = parse_double(value, line_no);
      require_range(a.beta >= 0.0, key, line_no);
    } else if (key == "gamma") {
      a.gamma = parse_double(value, line_no);
      require_range(a.gamma > 0.0 && a.gamma < 1.0, key, line_no);
    } else if (key == "atoms") {
      a.atoms = static_cast<int>(parse_long(value, line_no));
      require_range(a.atoms >= 2, key, line_no);
    } else if (key == "quantiles") {
      a.quantiles = static_cast<int>(parse_long(value, line_no));
      require_range(a.quantiles >= 1, key, line_no);
    } else if (key == "huber_kappa") {
      a.huber_kappa = parse_double(value, line_no);
      require_range(a.huber_kappa > 0.0, key, line_no);
    } else if (key == "lr") {
      a.lr = parse_double(value, line_no);
      require_range(a.lr > 0.0, key, line_no);
    } else if (key == "actor_lr") {
      a.actor_lr = parse_double(value, line_no);
      require_range(a.actor_lr > 0.0, key, line_no);
    } else if (key == "batch_size") {
      a.batch_size = static_cast<int>(parse_long(value, line_no));
      require_range(a.batch_size >= 1, key, line_no);
    } else if (key == "t_target") {
      a.t_target = parse_long(value, line_no);
      require_range(a.t_target >= 1, key, line_no);
    } else if (key == "polyak") {
      a.polyak = parse_double(value, line_no);
      require_range(a.polyak > 0.0 && a.polyak <= 1.0, key, line_no);
    } else if (key == "use_polyak") {
      a.use_polyak = parse_bool(value, line_no);
    } else if (key == "replay_capacity") {
      const long c = parse_long(value, line_no);
      require_range(c >= 1, key, line_no);
      a.replay_capacity = static_cast<std::size_t>(c);
    } else if (key == "min_replay") {
      a.min_replay = parse_long(value, line_no);
      require_range(a.min_replay >= 1, key, line_no);
    } else if (key == "explore_eps") {
      a.explore_eps = parse_double(value, line_no);
      require_range(a.explore_eps >= 0.0 && a.explore_eps <= 1.0, key, line_no);
    } else if (key == "hidden") {
      a.hidden = parse_list<int>(value, line_no, [](const std::string& v, int l) {
        const int h = static_cast<int>(parse_long(v, l));
        if (h < 1) throw ParseError("hidden sizes must be positive", l);
        return h;
      });
    } else if (key == "max_episode_len") {
      a.max_episode_len = static_cast<int>(parse_long(value, line_no));
      require_range(a.max_episode_len >= 1, key, line_no);
    } else if (key == "seeds") {
      cfg.seeds = parse_list<std::uint64_t>(
          value, line_no, [](const std::string& v, int l) {
            return static_cast<std::uint64_t>(parse_long(v, l));
          });
    } else if (key == "total_steps") {
      cfg.total_steps = parse_long(value, line_no);
      require_range(cfg.total_steps >= 0, key, line_no);
    } else if (key == "eval_every") {
      cfg.eval_every = parse_long(value, line_no);
      require_range(cfg.eval_every >= 1, key, line_no);
    } else if (key == "eval_episodes") {
      cfg.eval_episodes = static_cast<int>(parse_long(value, line_no));
      require_range(cfg.eval_episodes >= 1, key, line_no);
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else {
      throw UnknownKeyError("unknown key '" + key + "'", line_no);
    }
  }
  if (!in_defaults) {
    throw MissingSectionError("config must contain a [defaults] section");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_config(buf.str());
  if (const char* env_seed = std::getenv("DERL_SEED")) {
    cfg.seeds = {static_cast<std::uint64_t>(std::stoull(env_seed))};
  }
  return cfg;
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  char buf[96];
  const auto put_d = [&](const char* k, double v) {
    std::snprintf(buf, sizeof(buf), "%s = %.12g\n", k, v);
    os << buf;
  };
  const auto put_l = [&](const char* k, long v) {
    os << k << " = " << v << "\n";
  };
  const auto put_s = [&](const char* k, const std::string& v) {
    os << k << " = " << v << "\n";
  };
  os << "[defaults]\n";
  put_s("environment", cfg.environment);
  put_l("chain_n", cfg.chain_n);
  put_d("slip", cfg.slip);
  put_d("reward_spread", cfg.reward_spread);
  put_l("width", cfg.width);
  put_l("height", cfg.height);
  put_d("fall_penalty", cfg.fall_penalty);
  put_d("bandit_mean", cfg.bandit_mean);
  put_d("bandit_spread", cfg.bandit_spread);
  put_s("agent", cfg.agent);
  put_s("mode", cfg.mode);
  put_d("mix_epsilon", cfg.mix_epsilon);
  const AgentConfig& a = cfg.agent_cfg;
  put_d("epsilon", a.epsilon);
  put_d("lambda", a.lambda);
  put_d("beta", a.beta);
  put_d("gamma", a.gamma);
  put_l("atoms", a.atoms);
  put_l("quantiles", a.quantiles);
  put_d("huber_kappa", a.huber_kappa);
  put_d("lr", a.lr);
  put_d("actor_lr", a.actor_lr);
  put_l("batch_size", a.batch_size);
  put_l("t_target", a.t_target);
  put_d("polyak", a.polyak);
  put_s("use_polyak", a.use_polyak ? "true" : "false");
  put_l("replay_capacity", static_cast<long>(a.replay_capacity));
  put_l("min_replay", a.min_replay);
  put_d("explore_eps", a.explore_eps);
  {
    os << "hidden = ";
    for (std::size_t i = 0; i < a.hidden.size(); ++i) {
      os << (i ? "," : "") << a.hidden[i];
    }
    os << "\n";
  }
  put_l("max_episode_len", a.max_episode_len);
  {
    os << "seeds = ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      os << (i ? "," : "") << cfg.seeds[i];
    }
    os << "\n";
  }
  put_l("total_steps", cfg.total_steps);
  put_l("eval_every", cfg.eval_every);
  put_l("eval_episodes", cfg.eval_episodes);
  put_s("out_dir", cfg.out_dir);
  return os.str();
}

TabularMDP build_environment(const ExperimentConfig& cfg) {
  const double gamma = cfg.agent_cfg.gamma;
  if (cfg.environment == "chain") {
    return make_chain(cfg.chain_n, cfg.slip, gamma);
  }
  if (cfg.environment == "risky_chain") {
    return make_risky_chain(cfg.chain_n, cfg.slip, gamma, cfg.reward_spread);
  }
  if (cfg.environment == "cliff") {
    return make_cliff_grid(cfg.width, cfg.height, cfg.fall_penalty, gamma);
  }
  if (cfg.environment == "risky_bandit") {
    TabularMDP m = make_risky_bandit(cfg.bandit_mean, cfg.bandit_spread);
    m.gamma = gamma;
    return m;
  }
  throw Error("build_environment: unknown environment " + cfg.environment);
}

AgentConfig resolve_agent_config(const ExperimentConfig& cfg,
                                 const TabularMDP& env) {
  AgentConfig a = cfg.agent_cfg;
  auto [lo, hi] = env.return_bounds();
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  a.support_lo = lo;
  a.support_hi = hi;
  return a;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  const TabularMDP env = build_environment(cfg);
  const AgentConfig agent_cfg = resolve_agent_config(cfg, env);
  const AgentKind kind = agent_kind_from(cfg.agent);
  const FziMode mode = fzi_mode_from(cfg.mode);
  RunOptions run{cfg.total_steps, cfg.eval_every, cfg.eval_episodes};

  const auto one_run = [&](std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    AgentRunResult r =
        run_agent(env, kind, agent_cfg, mode, cfg.mix_epsilon, run, seed);
    const auto t1 = std::chrono::steady_clock::now();
    RunResult out;
    out.seed = seed;
    out.curve = std::move(r.curve);
    out.episode_returns = std::move(r.episode_returns);
    out.greedy_actions = std::move(r.greedy_actions);
    out.meta = r.meta;
    out.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    std::ostringstream ps;
    for (std::size_t s = 0; s < out.greedy_actions.size(); ++s) {
      ps << (s ? " " : "") << "s" << s << ":a" << out.greedy_actions[s];
    }
    out.policy_summary = ps.str();
    return out;
  };

  std::vector<std::future<RunResult>> futures;
  futures.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) {
    futures.push_back(std::async(std::launch::async, one_run, seed));
  }
  std::vector<RunResult> results;
  results.reserve(futures.size());
  for (auto& f : futures) results.push_back(f.get());
  return results;
}

double spearman_correlation(std::span<const double> x,
                            std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error("spearman_correlation: need two equal-length samples");
  }
  const auto ranks = [](std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const std::size_t n = rx.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

SweepResult sweep_epsilon(const ExperimentConfig& base,
                          std::span<const double> eps_list) {
  SweepResult sweep;
  for (const double eps : eps_list) {
    ExperimentConfig cfg = base;
    cfg.agent = "fzi_categorical";
    cfg.mode = "ablation_mix";
    cfg.mix_epsilon = eps;
    const std::vector<RunResult> results = run_experiment(cfg);
    double mean = 0.0;
    for (const RunResult& r : results) {
      double auc = 0.0;
      for (const EvalPoint& p : r.curve) auc += p.mean_return;
      if (!r.curve.empty()) auc /= static_cast<double>(r.curve.size());
      sweep.rows.push_back({eps, r.seed, auc});
      mean += auc;
    }
    mean /= static_cast<double>(results.size());
    sweep.eps.push_back(eps);
    sweep.mean_auc.push_back(mean);
  }
  sweep.spearman = eps_list.size() >= 2
                       ? spearman_correlation(sweep.eps, sweep.mean_auc)
                       : 0.0;
  return sweep;
}

std::string curve_to_csv(const RunResult& result, const std::string& variant) {
  std::string out = "step,return_mean,return_std,seed,variant\n";
  char buf[160];
  for (const EvalPoint& p : result.curve) {
    std::snprintf(buf, sizeof(buf), "%ld,%.12g,%.12g,%llu,%s\n", p.step,
                  p.mean_return, p.std_return,
                  static_cast<unsigned long long>(result.seed),
                  variant.c_str());
    out += buf;
  }
  return out;
}

void export_results(std::span<const RunResult> results,
                    const std::string& variant, const ExperimentConfig& cfg,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const RunResult& r : results) {
    const std::string stem = variant + "_seed" + std::to_string(r.seed);
    {
      std::ofstream out(dir / (stem + ".csv"));
      if (!out) throw IoError("export_results: cannot write curve CSV");
      out << curve_to_csv(r, variant);
    }
    {
      std::ofstream out(dir / (stem + ".episodes.csv"));
      if (!out) throw IoError("export_results: cannot write episode CSV");
      out << episode_returns_to_csv(r.episode_returns, r.seed, variant);
    }
    {
      std::ofstream meta(dir / (stem + ".meta.txt"));
      if (!meta) throw IoError("export_results: cannot write metadata");
      meta << "variant = " << variant << "\n"
           << "seed = " << r.seed << "\n"
           << "episodes = " << r.meta.episodes << "\n"
           << "clipped_decompositions = " << r.meta.clipped_fallbacks << "\n"
           << "sync_events = " << r.meta.sync_events << "\n"
           << "wall_ms = " << r.wall_ms << "\n"
           << "policy = " << r.policy_summary << "\n"
           << "--- config ---\n"
           << dump_config(cfg);
    }
  }
}

NamedCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_curve_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "step,return_mean,return_std,seed,variant") {
    throw IoError("read_curve_csv: bad header in " + path.string());
  }
  NamedCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f0, f1, f2, f3, f4;
    if (!std::getline(ls, f0, ',') || !std::getline(ls, f1, ',') ||
        !std::getline(ls, f2, ',') || !std::getline(ls, f3, ',') ||
        !std::getline(ls, f4)) {
      throw IoError("read_curve_csv: bad row in " + path.string());
    }
    curve.points.push_back({std::stol(f0), std::stod(f1), std::stod(f2)});
    curve.seed = std::stoull(f3);
    curve.variant = f4;
  }
  return curve;
}

std::string render_svg(std::span<const NamedCurve> curves) {
  constexpr int kW = 720, kH = 440;
  constexpr int kL = 60, kR = 160, kT = 20, kB = 40;
  const double plot_w = kW - kL - kR;
  const double plot_h = kH - kT - kB;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#ff7f0e", "#9467bd", "#8c564b"};

  // Aggregate across seeds per variant and step.
  std::map<std::string, std::map<long, std::vector<double>>> by_variant;
  for (const NamedCurve& c : curves) {
    for (const EvalPoint& p : c.points) {
      by_variant[c.variant][p.step].push_back(p.mean_return);
    }
  }
  double xmax = 1.0, ymin = 0.0, ymax = 1e-9;
  struct Band {
    std::vector<long> steps;
    std::vector<double> mean, sd;
  };
  std::map<std::string, Band> bands;
  for (const auto& [variant, series] : by_variant) {
    Band& b = bands[variant];
    for (const auto& [step, values] : series) {
      double m = 0.0;
      for (double v : values) m += v;
      m /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - m) * (v - m);
      const double sd =
          values.size() > 1 ? std::sqrt(var / values.size()) : 0.0;
      b.steps.push_back(step);
      b.mean.push_back(m);
      b.sd.push_back(sd);
      xmax = std::max(xmax, static_cast<double>(step));
      ymin = std::min(ymin, m - sd);
      ymax = std::max(ymax, m + sd);
    }
  }
  if (ymax <= ymin) ymax = ymin + 1.0;
  const auto sx = [&](double x) { return kL + plot_w * (x / xmax); };
  const auto sy = [&](double y) {
    return kT + plot_h * (1.0 - (y - ymin) / (ymax - ymin));
  };

  std::ostringstream os;
  char buf[256];
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                kW, kH, kW, kH);
  os << buf;
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Axes.
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                kL, kT + plot_h, kL + plot_w, kT + plot_h);
  os << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                kL, kT, kL, kT + plot_h);
  os << buf;
  for (int tick = 0; tick <= 4; ++tick) {
    const double xv = xmax * tick / 4.0;
    const double yv = ymin + (ymax - ymin) * tick / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                  "text-anchor=\"middle\">%.0f</text>\n",
                  sx(xv), kT + plot_h + 16.0, xv);
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                  "text-anchor=\"end\">%.3g</text>\n",
                  kL - 6.0, sy(yv) + 4.0, yv);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%d\" font-size=\"12\" "
                "text-anchor=\"middle\">environment steps</text>\n",
                kL + plot_w / 2, kH - 8);
  os << buf;

  int color_idx = 0;
  int legend_y = kT + 14;
  for (const auto& [variant, band] : bands) {
    const char* color = kColors[color_idx % 6];
    ++color_idx;
    // +/- one-sd band.
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" "
       << "stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < band.steps.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ",
                    sx(static_cast<double>(band.steps[i])),
                    sy(band.mean[i] + band.sd[i]));
      os << buf;
    }
    for (std::size_t i = band.steps.size(); i-- > 0;) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ",
                    sx(static_cast<double>(band.steps[i])),
                    sy(band.mean[i] - band.sd[i]));
      os << buf;
    }
    os << "\"/>\n";
    // Mean line.
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < band.steps.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ",
                    sx(static_cast<double>(band.steps[i])), sy(band.mean[i]));
      os << buf;
    }
    os << "\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.1f\" y=\"%d\" width=\"12\" height=\"12\" "
                  "fill=\"%s\"/><text x=\"%.1f\" y=\"%d\" "
                  "font-size=\"12\">%s</text>\n",
                  kL + plot_w + 12.0, legend_y - 10, color,
                  kL + plot_w + 30.0, legend_y, variant.c_str());
    os << buf;
    legend_y += 18;
  }
  os << "</svg>\n";
  return os.str();
}

std::filesystem::path export_svg(const std::filesystem::path& dir) {
  std::vector<NamedCurve> curves;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      curves.push_back(read_curve_csv(f));
    } catch (const IoError&) {
      // not a curve file (e.g. a sweep table); skip
    }
  }
  if (curves.empty()) {
    throw IoError("export_svg: no curve CSVs found in " + dir.string());
  }
  const std::filesystem::path out = dir / "plot.svg";
  std::ofstream os(out);
  if (!os) throw IoError("export_svg: cannot write " + out.string());
  os << render_svg(curves);
  return out;
}

}  // namespace derl
