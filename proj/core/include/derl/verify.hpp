#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace derl {

/// Outcome of one property check. `worst_margin` is the closest approach to
/// violation over all trials (negative means safely inside the bound) and is
/// recorded even when the check passes, so tolerance regressions stay
/// visible.
struct PropertyReport {
  std::string property;
  long trials = 0;
  long failures = 0;
  double worst_margin = 0.0;
  std::uint64_t seed = 0;

  bool passed() const { return failures == 0; }
};

/// Decomposition sup-norm bound: on random bounded discrete distributions,
/// the gap between F and its decomposition (with the remainder taken as F
/// itself) equals (1-eps) * max{1-F(E-), F(E-)} exactly and respects the
/// variance bound (1-eps) * (1 - sigma^2 / (2 c^2)).
PropertyReport check_decomposition_bound(long trials, std::uint64_t seed);

/// Exact unprojected policy backups on shared grids with deterministic
/// rewards never increase the sup KL divergence between two tables.
PropertyReport check_kl_nonexpansion(long trials, std::uint64_t seed);

/// TV <= sqrt(KL/2) and W1 <= support_diameter * TV on random shared-grid
/// pairs.
PropertyReport check_pinsker_and_w1(long trials, std::uint64_t seed);

/// Expectations contract at rate gamma under the distributional backup.
PropertyReport check_expectation_contraction(long trials, std::uint64_t seed);

/// (1-eps)(-ln q_m) + eps H(mu, q) = H(p, q) on unclipped triples, and both
/// forms share their argmin over a fine simplex grid.
PropertyReport check_decomposed_ce_identity(long trials, std::uint64_t seed);

/// Policy-iteration certificates on small random MDPs: lambda = 0 recovers
/// the enumerated optimal policy; improvement traces are monotone for
/// lambda in {0, 0.3, 0.7}; the corrected evaluation equals plain evaluation
/// of the reward-corrected MDP.
PropertyReport check_derpi(long trials, std::uint64_t seed);

/// All checks at their default trial counts.
std::vector<PropertyReport> run_all_checks(std::uint64_t seed);

void print_report_table(std::span<const PropertyReport> reports,
                        std::ostream& os);
std::string reports_to_csv(std::span<const PropertyReport> reports);
void write_report_csv(std::span<const PropertyReport> reports,
                      const std::filesystem::path& path);

}  // namespace derl
