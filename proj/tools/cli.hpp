#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "causal/data.hpp"
#include "causal/error.hpp"
#include "causal/montecarlo.hpp"
#include "causal/quasi.hpp"
#include "causal/regression.hpp"

namespace causal::cli {

/// Bumped whenever a report layout changes.
inline constexpr int kSchemaVersion = 1;

std::string version();

enum class Subcommand { Simulate, Estimate, MonteCarlo, EifCheck };
enum class Format { Json, Csv };

std::string_view to_string(Subcommand s);

/// Fully resolved run configuration. Every field has a default so the report
/// can embed the complete set of values used.
struct RunConfig {
  Subcommand subcommand = Subcommand::Estimate;
  std::string config_file;
  std::string input;
  std::string output = "-";
  Format format = Format::Json;
  std::uint64_t seed = 0;
  double level = 0.95;
  std::size_t threads = 0;

  // Columns.
  std::string treatment = "a";
  std::string outcome = "y";
  std::vector<std::string> covariates;  // empty: every other column
  std::string instrument = "z";
  std::string unit = "unit";
  std::string period = "period";
  std::string group = "group";
  std::string running = "r";

  // Nuisance learners and cross-fitting.
  std::size_t folds = 5;
  std::vector<double> clip{0.01, 0.99};
  double propensity_lambda = 0.0;
  FeatureMap propensity_features = FeatureMap::Linear;
  double outcome_lambda = 0.0;
  FeatureMap outcome_features = FeatureMap::Linear;

  // estimate
  std::string method;
  std::optional<double> cutoff;
  std::optional<double> bandwidth;
  Kernel kernel = Kernel::Rectangular;
  bool placebo = false;
  std::optional<double> caliper;
  bool with_replacement = false;

  // simulate
  std::string dgp = "observational";
  std::string truth_output;
  std::size_t n = 1000;
  std::size_t d = 2;
  double confounding = 0.5;
  double tau = 2.0;
  double strength = 0.5;
  std::size_t units = 100;
  std::size_t periods = 2;
  double violation = 0.0;

  // montecarlo
  std::string scenario = "both_correct";  // or "all"
  std::size_t reps = 500;
  std::vector<std::string> estimators{"aipw", "naive", "ipw", "gformula"};

  // eif-check
  std::string functional = "ate";
  std::string estimate_measure;
  std::string prob_column = "prob";
  std::size_t scores = 100;
};

/// Raised for --help; carries the help text.
struct HelpRequested : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses argv (program name first). Usage errors are causal::Error with kind Usage.
RunConfig parse_args(const std::vector<std::string>& args);

/// Resolved configuration as ordered JSON.
nlohmann::ordered_json config_json(const RunConfig& config);

/// Executes the run and returns the serialized report.
std::string run(const RunConfig& config);

/// Writes the report to `path` ("-" is standard output).
void emit_report(const std::string& report, const std::string& path, std::ostream& stdout_stream);

nlohmann::ordered_json ate_report(const AteEstimate& estimate, const RunConfig& config);
std::string ate_report_csv(const AteEstimate& estimate);

/// Process exit status for an error kind: 1 usage, 2 data or validation, 3 numerical.
int exit_code(ErrorKind kind);

/// Entry point used by main(); never throws.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace causal::cli
