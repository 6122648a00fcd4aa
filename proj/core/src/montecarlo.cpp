#include "causal/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "causal/ate.hpp"
#include "causal/error.hpp"
#include "causal/parallel.hpp"

namespace causal {

namespace {

constexpr double kMaxFailureShare = 0.10;
constexpr std::uint64_t kFoldSeedOffset = 0x9E3779B97F4A7C15ULL;

struct RepOutcome {
  bool ok = false;
  double estimate = 0.0;
  std::optional<double> se;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::size_t clip_count = 0;
  std::size_t unmatched = 0;
};

bool needs_nuisance(McEstimator e) {
  return e != McEstimator::Naive && e != McEstimator::IpwOracle;
}

RepOutcome from_estimate(const AteEstimate& est) {
  RepOutcome out;
  out.ok = std::isfinite(est.psi_hat);
  out.estimate = est.psi_hat;
  out.se = est.se;
  out.ci_low = est.ci_low;
  out.ci_high = est.ci_high;
  out.clip_count = est.diagnostics.clip_count.value_or(0);
  out.unmatched = est.diagnostics.unmatched_count.value_or(0);
  return out;
}

std::vector<RepOutcome> run_replication(const McConfig& config, const LearnerConfig& learners,
                                        std::uint64_t seed) {
  ObsDgpConfig dgp = config.dgp;
  dgp.n = config.n;
  const ObsSimulation sim = generate_observational(dgp, seed);

  std::optional<NuisanceFit> fit;
  bool fit_failed = false;
  if (std::any_of(config.estimators.begin(), config.estimators.end(), needs_nuisance)) {
    try {
      fit = cross_fit(sim.data, config.k, learners, config.clip, seed + kFoldSeedOffset);
    } catch (const Error&) {
      fit_failed = true;
    }
  }

  std::vector<RepOutcome> outcomes;
  outcomes.reserve(config.estimators.size());
  for (McEstimator e : config.estimators) {
    if (needs_nuisance(e) && fit_failed) {
      outcomes.emplace_back();
      continue;
    }
    try {
      switch (e) {
        case McEstimator::Naive: outcomes.push_back(from_estimate(naive_dim(sim.data, config.level))); break;
        case McEstimator::Ipw:
          outcomes.push_back(
              from_estimate(ipw(sim.data, fit->pi_hat, IpwNormalization::HorvitzThompson, config.level)));
          outcomes.back().clip_count = fit->clip_count;
          break;
        case McEstimator::IpwHajek:
          outcomes.push_back(from_estimate(ipw(sim.data, fit->pi_hat, IpwNormalization::Hajek, config.level)));
          outcomes.back().clip_count = fit->clip_count;
          break;
        case McEstimator::IpwOracle:
          outcomes.push_back(from_estimate(
              ipw(sim.data, sim.truth.propensity, IpwNormalization::HorvitzThompson, config.level)));
          break;
        case McEstimator::GFormula:
          outcomes.push_back(from_estimate(g_formula(sim.data, fit->mu0_hat, fit->mu1_hat)));
          break;
        case McEstimator::Aipw: outcomes.push_back(from_estimate(aipw(sim.data, *fit, config.level))); break;
        case McEstimator::Psm: {
          const MatchResult match = psm_att(sim.data, fit->pi_hat, {}, config.level);
          outcomes.push_back(from_estimate(match.att));
          outcomes.back().unmatched = match.unmatched_treated.size();
          break;
        }
      }
    } catch (const Error&) {
      outcomes.emplace_back();
    }
  }
  return outcomes;
}

McRow summarize_estimator(std::string name, const std::vector<std::vector<RepOutcome>>& reps, std::size_t column,
                          double truth) {
  McRow row;
  row.estimator = std::move(name);
  std::vector<const RepOutcome*> ok;
  for (const auto& rep : reps) {
    if (rep[column].ok) ok.push_back(&rep[column]);
  }
  row.successes = ok.size();
  row.failures = reps.size() - ok.size();
  if (ok.empty()) return row;

  const double r = static_cast<double>(ok.size());
  double sum = 0.0;
  for (const auto* o : ok) sum += o->estimate;
  row.mean = sum / r;
  row.bias = row.mean - truth;

  double ss = 0.0;
  double sq_err = 0.0;
  for (const auto* o : ok) {
    ss += (o->estimate - row.mean) * (o->estimate - row.mean);
    sq_err += (o->estimate - truth) * (o->estimate - truth);
  }
  row.variance = ss / r;
  row.mse = sq_err / r;
  row.mc_se = ok.size() > 1 ? std::sqrt(ss / (r - 1.0) / r) : 0.0;

  std::size_t with_ci = 0;
  std::size_t covered = 0;
  double se_sum = 0.0;
  double clip_sum = 0.0;
  double unmatched_sum = 0.0;
  for (const auto* o : ok) {
    clip_sum += static_cast<double>(o->clip_count);
    unmatched_sum += static_cast<double>(o->unmatched);
    if (o->se && o->ci_low && o->ci_high) {
      ++with_ci;
      se_sum += *o->se;
      if (*o->ci_low <= truth && truth <= *o->ci_high) ++covered;
    }
  }
  if (with_ci == ok.size()) {
    row.coverage = static_cast<double>(covered) / r;
    row.mean_se = se_sum / r;
  }
  row.mean_clip_count = clip_sum / r;
  row.mean_unmatched = unmatched_sum / r;
  return row;
}

}  // namespace

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::BothCorrect: return "both_correct";
    case Scenario::PiWrong: return "pi_wrong";
    case Scenario::MuWrong: return "mu_wrong";
    case Scenario::BothWrong: return "both_wrong";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view label) {
  for (Scenario s : kAllScenarios) {
    if (to_string(s) == label) return s;
  }
  throw Error(ErrorKind::Config, "unknown scenario '" + std::string(label) + "'");
}

LearnerConfig learners_for(Scenario scenario, const LearnerConfig& base) {
  LearnerConfig out = base;
  const bool pi_ok = scenario == Scenario::BothCorrect || scenario == Scenario::MuWrong;
  const bool mu_ok = scenario == Scenario::BothCorrect || scenario == Scenario::PiWrong;
  out.propensity_features = pi_ok ? FeatureMap::LinearPlusQuadratic : FeatureMap::Linear;
  out.outcome_features = mu_ok ? FeatureMap::LinearPlusQuadratic : FeatureMap::Linear;
  return out;
}

ObsDgpConfig dr_dgp() {
  ObsDgpConfig dgp;
  dgp.n = 2000;
  dgp.d = 2;
  dgp.confounding_strength = 0.5;
  dgp.propensity_form = PropensityForm::LogisticQuadratic;
  dgp.propensity_quadratic = 0.25;
  dgp.tau0 = 2.0;
  dgp.outcome_intercept = 0.0;
  dgp.outcome_slope = 1.0;
  dgp.outcome_form = OutcomeForm::LinearPlusQuadratic;
  dgp.outcome_quadratic = 1.0;
  dgp.outcome_noise_sd = 1.0;
  return dgp;
}

std::string_view to_string(McEstimator estimator) {
  switch (estimator) {
    case McEstimator::Naive: return "naive";
    case McEstimator::Ipw: return "ipw";
    case McEstimator::IpwHajek: return "ipw_hajek";
    case McEstimator::IpwOracle: return "ipw_oracle";
    case McEstimator::GFormula: return "gformula";
    case McEstimator::Aipw: return "aipw";
    case McEstimator::Psm: return "psm";
  }
  return "unknown";
}

McEstimator parse_estimator(std::string_view label) {
  for (McEstimator e : {McEstimator::Naive, McEstimator::Ipw, McEstimator::IpwHajek, McEstimator::IpwOracle,
                        McEstimator::GFormula, McEstimator::Aipw, McEstimator::Psm}) {
    if (to_string(e) == label) return e;
  }
  throw Error(ErrorKind::Config, "unknown estimator '" + std::string(label) + "'");
}

void McConfig::validate() const {
  if (replications < 2) throw Error(ErrorKind::Config, "replications must be at least 2");
  if (estimators.empty()) throw Error(ErrorKind::Config, "no estimators requested");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::Config, "level must lie in (0, 1)");
  if (!(clip.lo > 0.0 && clip.lo < clip.hi && clip.hi < 1.0)) {
    throw Error(ErrorKind::Config, "clip bounds must satisfy 0 < lo < hi < 1");
  }
  if (k < 2 || k > n) throw Error(ErrorKind::Config, "cross-fitting folds must satisfy 2 <= k <= n");
  ObsDgpConfig dgp_n = dgp;
  dgp_n.n = n;
  dgp_n.validate();
}

const McRow& McReport::row(std::string_view estimator) const {
  for (const auto& r : rows) {
    if (r.estimator == estimator) return r;
  }
  throw Error(ErrorKind::Config, "report has no estimator '" + std::string(estimator) + "'");
}

McReport run_mc(const McConfig& config) {
  config.validate();
  const LearnerConfig learners = learners_for(config.scenario, config.learners);

  std::vector<std::vector<RepOutcome>> reps(config.replications);
  parallel_for(config.replications, config.threads, [&](std::size_t r) {
    const std::uint64_t seed = config.identical_replications ? config.seed : config.seed + r;
    reps[r] = run_replication(config, learners, seed);
  });

  McReport report;
  report.scenario = config.scenario;
  report.true_ate = config.dgp.population_ate();
  report.replications = config.replications;
  report.n = config.n;
  report.seed = config.seed;
  for (std::size_t c = 0; c < config.estimators.size(); ++c) {
    report.rows.push_back(
        summarize_estimator(std::string(to_string(config.estimators[c])), reps, c, report.true_ate));
    const McRow& row = report.rows.back();
    if (static_cast<double>(row.failures) > kMaxFailureShare * static_cast<double>(config.replications)) {
      throw Error(ErrorKind::Numerical, "estimator " + row.estimator + " failed in " + std::to_string(row.failures) +
                                            " of " + std::to_string(config.replications) + " replications");
    }
  }
  return report;
}

std::vector<McReport> dr_suite(const McConfig& base) {
  std::vector<McReport> reports;
  for (Scenario s : kAllScenarios) {
    McConfig config = base;
    config.scenario = s;
    reports.push_back(run_mc(config));
  }
  return reports;
}

std::string mc_report_csv(const std::vector<McReport>& reports) {
  std::ostringstream out;
  out << "scenario,estimator,replications,n,seed,true_ate,successes,failures,mean,bias,mc_se,variance,mse,"
         "coverage,mean_se,mean_clip_count,mean_unmatched\n";
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      out << to_string(rep.scenario) << ',' << row.estimator << ',' << rep.replications << ',' << rep.n << ','
          << rep.seed << ',' << format_double(rep.true_ate) << ',' << row.successes << ',' << row.failures << ','
          << format_double(row.mean) << ',' << format_double(row.bias) << ',' << format_double(row.mc_se) << ','
          << format_double(row.variance) << ',' << format_double(row.mse) << ',' << opt(row.coverage) << ','
          << opt(row.mean_se) << ',' << format_double(row.mean_clip_count) << ','
          << format_double(row.mean_unmatched) << '\n';
    }
  }
  return out.str();
}

ErrorDecomposition error_decomposition(const ObservationalDataset& data, const GroundTruth& truth) {
  const std::size_t n = data.size();
  if (truth.y1.size() != n || truth.y0.size() != n) {
    throw Error(ErrorKind::Validation, "ground truth length differs from the dataset");
  }
  double s1[2] = {0.0, 0.0};  // sum of Y(1) by arm
  double s0[2] = {0.0, 0.0};  // sum of Y(0) by arm
  double count[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const int a = data.a(i);
    s1[a] += truth.y1[i];
    s0[a] += truth.y0[i];
    count[a] += 1.0;
  }
  if (count[0] == 0.0 || count[1] == 0.0) throw Error(ErrorKind::Arm, "error decomposition needs both arms");

  const double alpha1 = s1[1] / count[1];  // E[Y(1)|A=1]
  const double alpha2 = s1[0] / count[0];  // E[Y(1)|A=0]
  const double alpha3 = s0[1] / count[1];  // E[Y(0)|A=1]
  const double alpha4 = s0[0] / count[0];  // E[Y(0)|A=0]
  ErrorDecomposition out;
  out.rho = count[1] / static_cast<double>(n);
  const double causal = out.rho * alpha1 + (1.0 - out.rho) * alpha2 - out.rho * alpha3 - (1.0 - out.rho) * alpha4;
  out.total_gap = (alpha1 - alpha4) - causal;
  out.baseline_diff = alpha3 - alpha4;
  out.delta1 = alpha1 - alpha3;
  out.delta0 = alpha2 - alpha4;
  out.het_term = (1.0 - out.rho) * (out.delta1 - out.delta0);
  return out;
}

}  // namespace causal
