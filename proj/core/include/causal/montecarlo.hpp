#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causal/data.hpp"
#include "causal/dgp.hpp"
#include "causal/nuisance.hpp"

namespace causal {

/// Which nuisance learners match the DGP. The DR DGP has quadratic terms in
/// both the propensity and the outcome; a "wrong" learner drops them.
enum class Scenario { BothCorrect, PiWrong, MuWrong, BothWrong };

std::string_view to_string(Scenario scenario);
Scenario parse_scenario(std::string_view label);
inline constexpr Scenario kAllScenarios[] = {Scenario::BothCorrect, Scenario::PiWrong, Scenario::MuWrong,
                                             Scenario::BothWrong};

/// Feature maps for the scenario; lambdas and solver settings come from `base`.
LearnerConfig learners_for(Scenario scenario, const LearnerConfig& base);

/// Constant-effect DGP (ATE 2) with quadratic propensity and outcome, used by the DR suite.
ObsDgpConfig dr_dgp();

enum class McEstimator { Naive, Ipw, IpwHajek, IpwOracle, GFormula, Aipw, Psm };

std::string_view to_string(McEstimator estimator);
McEstimator parse_estimator(std::string_view label);

struct McConfig {
  ObsDgpConfig dgp = dr_dgp();
  std::vector<McEstimator> estimators{McEstimator::Aipw, McEstimator::Naive, McEstimator::Ipw,
                                      McEstimator::GFormula};
  std::size_t replications = 500;
  std::size_t n = 2000;  // overrides dgp.n
  std::uint64_t seed = 0;
  Scenario scenario = Scenario::BothCorrect;
  LearnerConfig learners;  // feature maps are replaced according to the scenario
  std::size_t k = 5;
  ClipBounds clip;
  double level = 0.95;
  std::size_t threads = 0;
  /// Every replication reuses `seed` instead of seed + r.
  bool identical_replications = false;

  void validate() const;
};

struct McRow {
  std::string estimator;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double mean = 0.0;
  double bias = 0.0;      // mean - true ATE
  double mc_se = 0.0;     // standard error of the mean across replications
  double variance = 0.0;  // divisor R, so mse = variance + bias^2
  double mse = 0.0;
  std::optional<double> coverage;  // share of CIs containing the true ATE
  std::optional<double> mean_se;
  double mean_clip_count = 0.0;
  double mean_unmatched = 0.0;
};

struct McReport {
  Scenario scenario = Scenario::BothCorrect;
  double true_ate = 0.0;
  std::size_t replications = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<McRow> rows;

  const McRow& row(std::string_view estimator) const;
};

/// Runs R replications with data seeds seed + r. Replication failures are
/// counted per estimator; more than 10% failures for an estimator is an error.
McReport run_mc(const McConfig& config);

/// Runs the four scenarios with the same seed.
std::vector<McReport> dr_suite(const McConfig& base);

/// One row per (scenario, estimator), fixed column order.
std::string mc_report_csv(const std::vector<McReport>& reports);

/// Split of the naive contrast's gap to the ATE, computed on potential outcomes:
///   total_gap     = E[Y(1)|A=1] - E[Y(0)|A=0] - (E[Y(1)] - E[Y(0)])
///   baseline_diff = E[Y(0)|A=1] - E[Y(0)|A=0]
///   het_term      = (1 - rho) (delta1 - delta0)
/// with rho the treated share, delta_a = E[Y(1)|A=a] - E[Y(0)|A=a].
struct ErrorDecomposition {
  double total_gap = 0.0;
  double baseline_diff = 0.0;
  double het_term = 0.0;
  double rho = 0.0;
  double delta1 = 0.0;
  double delta0 = 0.0;
};

ErrorDecomposition error_decomposition(const ObservationalDataset& data, const GroundTruth& truth);

}  // namespace causal
