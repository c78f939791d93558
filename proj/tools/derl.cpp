// Batch CLI for the distributional-RL laboratory: property suites, seeded
// experiment runs, the epsilon-sweep and actor-critic ablations, and CSV/SVG
// export. Exit codes: 0 success, 1 property failure, 2 config error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "derl/harness.hpp"
#include "derl/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitConfigError = 2;

derl::ExperimentConfig load_or_exit(const std::string& path) {
  try {
    return derl::load_config(path);
  } catch (const derl::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    std::exit(kExitConfigError);
  }
}

int cmd_verify(std::uint64_t seed, const std::string& csv_path) {
  const std::vector<derl::PropertyReport> reports =
      derl::run_all_checks(seed);
  derl::print_report_table(reports, std::cout);
  if (!csv_path.empty()) {
    derl::write_report_csv(reports, csv_path);
    std::cout << "wrote " << csv_path << "\n";
  }
  for (const derl::PropertyReport& r : reports) {
    if (!r.passed()) return kExitPropertyFailure;
  }
  return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
  derl::ExperimentConfig cfg = load_or_exit(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  const std::vector<derl::RunResult> results = derl::run_experiment(cfg);
  derl::export_results(results, cfg.agent, cfg, cfg.out_dir);
  for (const derl::RunResult& r : results) {
    std::cout << "seed " << r.seed << ": episodes " << r.meta.episodes
              << ", final policy " << r.policy_summary << "\n";
  }
  std::cout << "wrote " << results.size() << " curve files to " << cfg.out_dir
            << "\n";
  return kExitOk;
}

int cmd_sweep_eps(const std::string& config_path,
                  const std::vector<double>& eps,
                  const std::string& out_override) {
  derl::ExperimentConfig cfg = load_or_exit(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  const derl::SweepResult sweep = derl::sweep_epsilon(cfg, eps);

  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path table =
      std::filesystem::path(cfg.out_dir) / "sweep_eps.csv";
  {
    std::ofstream out(table);
    out << "eps,seed,auc\n";
    char buf[96];
    for (const derl::SweepRow& row : sweep.rows) {
      std::snprintf(buf, sizeof(buf), "%.12g,%llu,%.12g\n", row.eps,
                    static_cast<unsigned long long>(row.seed), row.auc);
      out << buf;
    }
  }
  std::cout << "eps    mean_auc\n";
  for (std::size_t i = 0; i < sweep.eps.size(); ++i) {
    std::printf("%-6.3g %.6g\n", sweep.eps[i], sweep.mean_auc[i]);
  }
  std::cout << "spearman(eps, mean_auc) = " << sweep.spearman << "\n"
            << "wrote " << table.string() << "\n";
  return kExitOk;
}

int cmd_ablate_ac(const std::string& config_path,
                  const std::string& out_override) {
  derl::ExperimentConfig cfg = load_or_exit(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  for (const std::string variant : {"ac", "ac_ve", "ac_re", "ac_re_ve"}) {
    derl::ExperimentConfig vcfg = cfg;
    vcfg.agent = variant;
    const std::vector<derl::RunResult> results = derl::run_experiment(vcfg);
    derl::export_results(results, variant, vcfg, vcfg.out_dir);
    double mean = 0.0;
    for (const derl::RunResult& r : results) {
      if (!r.curve.empty()) mean += r.curve.back().mean_return;
    }
    mean /= static_cast<double>(results.size());
    std::cout << variant << ": final eval return (mean over seeds) = " << mean
              << "\n";
  }
  std::cout << "wrote curves to " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_export(const std::string& dir, bool svg) {
  if (svg) {
    const std::filesystem::path out = derl::export_svg(dir);
    std::cout << "wrote " << out.string() << "\n";
  } else {
    std::cout << "nothing to do (curve CSVs are written by run/sweep-eps/"
                 "ablate-ac; pass --svg to render a plot)\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributional RL laboratory"};
  app.require_subcommand(1);

  std::uint64_t seed = 20240901;
  std::string csv_path;
  CLI::App* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--seed", seed, "base seed for the property checks");
  verify->add_option("--csv", csv_path, "also write the report table as CSV");

  std::string run_config, run_out;
  CLI::App* run = app.add_subcommand("run", "run one seeded experiment");
  run->add_option("config", run_config, "experiment config file")->required();
  run->add_option("--out", run_out, "override the output directory");

  std::string sweep_config, sweep_out;
  std::vector<double> eps_list{0.0, 0.25, 0.5, 0.75, 1.0};
  CLI::App* sweep =
      app.add_subcommand("sweep-eps", "epsilon sweep of the mixed target");
  sweep->add_option("config", sweep_config, "experiment config file")
      ->required();
  sweep->add_option("--eps", eps_list, "epsilon values")->delimiter(',');
  sweep->add_option("--out", sweep_out, "override the output directory");

  std::string ablate_config, ablate_out;
  CLI::App* ablate =
      app.add_subcommand("ablate-ac", "AC / AC+VE / AC+RE / AC+RE+VE runs");
  ablate->add_option("config", ablate_config, "experiment config file")
      ->required();
  ablate->add_option("--out", ablate_out, "override the output directory");

  std::string export_dir;
  bool export_svg_flag = false;
  CLI::App* exp = app.add_subcommand("export", "render results from a directory");
  exp->add_option("dir", export_dir, "results directory")->required();
  exp->add_flag("--svg", export_svg_flag, "render an SVG learning-curve plot");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return cmd_verify(seed, csv_path);
    if (run->parsed()) return cmd_run(run_config, run_out);
    if (sweep->parsed()) return cmd_sweep_eps(sweep_config, eps_list, sweep_out);
    if (ablate->parsed()) return cmd_ablate_ac(ablate_config, ablate_out);
    if (exp->parsed()) return cmd_export(export_dir, export_svg_flag);
  } catch (const derl::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const derl::MissingSectionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const derl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
