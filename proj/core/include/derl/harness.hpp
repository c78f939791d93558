#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "derl/agents.hpp"
#include "derl/mdp.hpp"

namespace derl {

/// One experiment: an environment, an agent variant, hyperparameters, and
/// the seeded run schedule. Parsed from the `[defaults]` key=value format.
struct ExperimentConfig {
  std::string environment = "chain";  // chain|risky_chain|cliff|risky_bandit
  int chain_n = 5;
  double slip = 0.0;
  double reward_spread = 1.0;
  int width = 4;
  int height = 3;
  double fall_penalty = -1.0;
  double bandit_mean = 1.0;
  double bandit_spread = 1.0;

  std::string agent = "fqi";  // fqi|fzi_categorical|derac|ac|ac_ve|ac_re|ac_re_ve
  std::string mode = "vanilla_ce";  // vanilla_ce|decomposed|ablation_mix
  double mix_epsilon = 1.0;
  AgentConfig agent_cfg;

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  long total_steps = 5000;
  long eval_every = 500;
  int eval_episodes = 10;
  std::string out_dir = "results";
};

/// Parse the documented config text. Unknown keys, bad values, and
/// out-of-range settings are hard errors; keys before a `[defaults]` header
/// (or a missing header) raise MissingSectionError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical serialization: every key in a fixed order. dump o load is
/// idempotent.
std::string dump_config(const ExperimentConfig& cfg);

/// Instantiate the configured environment.
TabularMDP build_environment(const ExperimentConfig& cfg);

/// Agent hyperparameters with the categorical support bounds derived from
/// the environment's return range.
AgentConfig resolve_agent_config(const ExperimentConfig& cfg,
                                 const TabularMDP& env);

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<EvalPoint> curve;
  std::vector<EpisodeReturn> episode_returns;
  std::vector<int> greedy_actions;
  std::string policy_summary;
  RunMetadata meta;
  double wall_ms = 0.0;
};

/// One learning run per seed; seeds fan out to a worker pool and results
/// come back in seed order. Bit-reproducible per (config, seed).
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

struct SweepRow {
  double eps = 0.0;
  std::uint64_t seed = 0;
  double auc = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<double> eps;
  std::vector<double> mean_auc;  // per eps, over seeds
  double spearman = 0.0;         // rank correlation of eps vs mean AUC
};

/// Categorical fitted-Z ablation over the mixing proportion: one run per
/// (eps, seed), scored by the mean evaluation return over the curve (AUC).
SweepResult sweep_epsilon(const ExperimentConfig& base,
                          std::span<const double> eps_list);

double spearman_correlation(std::span<const double> x,
                            std::span<const double> y);

/// Evaluation-curve CSV with columns step,return_mean,return_std,seed,variant.
std::string curve_to_csv(const RunResult& result, const std::string& variant);

/// Write per-seed curve CSVs and metadata sidecars (config echo, clipped
/// decomposition count, sync events, wall time) under `dir`.
void export_results(std::span<const RunResult> results,
                    const std::string& variant, const ExperimentConfig& cfg,
                    const std::filesystem::path& dir);

struct NamedCurve {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<EvalPoint> points;
};

NamedCurve read_curve_csv(const std::filesystem::path& path);

/// Static line plot: per variant, the across-seed mean return with a
/// +/- one-standard-deviation band.
std::string render_svg(std::span<const NamedCurve> curves);

/// Scan `dir` for curve CSVs and render them into plot.svg.
std::filesystem::path export_svg(const std::filesystem::path& dir);

}  // namespace derl
