#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "causal/ate.hpp"
#include "causal/dgp.hpp"
#include "causal/eif.hpp"
#include "causal/nuisance.hpp"
#include "causal/rng.hpp"
#include "causal/stats.hpp"

#ifndef CAUSAL_VERSION
#define CAUSAL_VERSION "0.0.0"
#endif

namespace causal::cli {

using ojson = nlohmann::ordered_json;

namespace {

const std::map<std::string, FeatureMap> kFeatureMaps{{"linear", FeatureMap::Linear},
                                                     {"quadratic", FeatureMap::LinearPlusQuadratic}};
const std::map<std::string, Kernel> kKernels{{"rectangular", Kernel::Rectangular},
                                             {"triangular", Kernel::Triangular}};
const std::map<std::string, Format> kFormats{{"json", Format::Json}, {"csv", Format::Csv}};

const std::vector<std::string> kObsMethods{"naive", "ipw", "ipw_hajek", "gformula", "psm", "aipw"};
const std::vector<std::string> kMethods{"naive", "ipw", "ipw_hajek", "gformula", "psm", "aipw",
                                        "did", "rd", "iv", "tsls", "fe"};
const std::vector<std::string> kDgps{"observational", "dr", "iv", "panel", "rd"};

template <class T>
std::string name_of(const std::map<std::string, T>& table, T value) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "unknown";
}

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson version_json() {
  ojson v;
  v["tool"] = version();
  v["schema"] = kSchemaVersion;
  return v;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

std::pair<double, double> normal_ci(double estimate, double se, double level) {
  const double z = stats::normal_critical(level);
  return {estimate - z * se, estimate + z * se};
}

LearnerConfig learners_of(const RunConfig& c) {
  LearnerConfig l;
  l.propensity_lambda = c.propensity_lambda;
  l.propensity_features = c.propensity_features;
  l.outcome_lambda = c.outcome_lambda;
  l.outcome_features = c.outcome_features;
  return l;
}

std::vector<std::string> other_columns(const CsvTable& table, const std::vector<std::string>& exclude) {
  std::vector<std::string> out;
  for (const auto& h : table.header) {
    if (!contains(exclude, h)) out.push_back(h);
  }
  return out;
}

void require_input(const RunConfig& c) {
  if (c.input.empty()) throw Error(ErrorKind::Usage, "--input is required for " + std::string(to_string(c.subcommand)));
}

// ---------------------------------------------------------------------------
// simulate

std::filesystem::path default_truth_path(const std::string& output) {
  std::filesystem::path p(output);
  return p.replace_extension().string() + ".truth.csv";
}

std::string run_simulate(const RunConfig& c) {
  if (c.output == "-") throw Error(ErrorKind::Usage, "simulate needs --output for the dataset file");
  const std::string truth_path = c.truth_output.empty() ? default_truth_path(c.output).string() : c.truth_output;

  ojson report;
  report["kind"] = "simulate";
  report["dgp"] = c.dgp;
  report["seed"] = c.seed;
  std::string data_csv;
  std::string truth_csv;

  if (c.dgp == "observational" || c.dgp == "dr") {
    ObsDgpConfig dgp = c.dgp == "dr" ? dr_dgp() : ObsDgpConfig{};
    dgp.n = c.n;
    if (c.dgp == "observational") {
      dgp.d = c.d;
      dgp.confounding_strength = c.confounding;
      dgp.tau0 = c.tau;
    }
    const ObsSimulation sim = generate_observational(dgp, c.seed);
    CsvSchema schema{c.treatment, c.outcome, sim.data.covariate_names()};
    data_csv = to_csv(sim.data, schema);
    truth_csv = ground_truth_csv(sim.truth);
    const Summary s = summarize(sim.data);
    report["n"] = s.n;
    report["treated"] = s.treated;
    report["control"] = s.control;
    report["true_ate"] = dgp.population_ate();
    report["sample_ate"] = sim.truth.true_ate;
  } else if (c.dgp == "iv") {
    IvDgpConfig base;
    base.n = c.n;
    base.p_always = 0.25;
    base.p_never = 0.25;
    base.p_complier = 0.5;
    base.effect_by_type = {c.tau, c.tau, c.tau, c.tau};
    base.baseline_by_type = {1.0, 0.0, -1.0, 0.0};
    const IvDgpConfig dgp = base.with_first_stage_strength(c.strength);
    const IvSimulation sim = generate_iv(dgp, c.seed);
    data_csv = to_csv(sim.data, IvSchema{c.instrument, c.treatment, c.outcome, {}});
    truth_csv = iv_ground_truth_csv(sim);
    report["n"] = sim.data.size();
    report["first_stage_strength"] = dgp.first_stage_strength();
    report["true_late"] = sim.true_late;
  } else if (c.dgp == "panel") {
    PanelDgpConfig dgp;
    dgp.n_units = c.units;
    dgp.n_periods = c.periods;
    dgp.group_effect = 1.0;
    dgp.time_trend = 0.5;
    dgp.treatment_effect = c.tau;
    dgp.parallel_violation = c.violation;
    dgp.unit_effect_sd = 1.0;
    const PanelSimulation sim = generate_panel(dgp, c.seed);
    data_csv = to_csv(sim.data, PanelSchema{c.unit, c.period, c.treatment, c.outcome, c.group});
    truth_csv = panel_ground_truth_csv(sim);
    report["n"] = sim.data.size();
    report["units"] = c.units;
    report["periods"] = c.periods;
    report["true_effect"] = sim.true_effect;
  } else if (c.dgp == "rd") {
    RdDgpConfig dgp;
    dgp.n = c.n;
    dgp.cutoff = c.cutoff.value_or(0.0);
    dgp.jump = c.tau;
    dgp.slope_left = 1.0;
    dgp.slope_right = 0.5;
    const RdSimulation sim = generate_rd(dgp, c.seed);
    data_csv = to_csv(sim.data, CsvSchema{c.treatment, c.outcome, sim.data.covariate_names()});
    truth_csv = ground_truth_csv(sim.truth);
    report["n"] = sim.data.size();
    report["true_jump"] = sim.true_jump;
  } else {
    throw Error(ErrorKind::Usage, "unknown --dgp '" + c.dgp + "'");
  }

  write_text_file(c.output, data_csv);
  write_text_file(truth_path, truth_csv);
  report["files"] = {{"data", c.output}, {"truth", truth_path}};
  report["config"] = config_json(c);
  report["version"] = version_json();
  return dump(report);
}

// ---------------------------------------------------------------------------
// estimate

AteEstimate estimate_observational(RunConfig& c) {
  const CsvTable table = read_csv_table(c.input);
  if (c.covariates.empty()) c.covariates = other_columns(table, {c.treatment, c.outcome});
  const CsvSchema schema{c.treatment, c.outcome, c.covariates};
  const ObservationalDataset data = dataset_from_table(table, schema);

  if (c.method == "naive") return naive_dim(data, c.level);
  const NuisanceFit fit = cross_fit(data, c.folds, learners_of(c), ClipBounds{c.clip[0], c.clip[1]}, c.seed);
  if (c.method == "ipw" || c.method == "ipw_hajek") {
    AteEstimate est = ipw(data, fit.pi_hat,
                          c.method == "ipw" ? IpwNormalization::HorvitzThompson : IpwNormalization::Hajek, c.level);
    est.diagnostics.clip_count = fit.clip_count;
    return est;
  }
  if (c.method == "gformula") return g_formula(data, fit.mu0_hat, fit.mu1_hat);
  if (c.method == "psm") {
    MatchResult match = psm_att(data, fit.pi_hat, MatchSpec{c.caliper, c.with_replacement}, c.level);
    match.att.diagnostics.clip_count = fit.clip_count;
    return match.att;
  }
  return aipw(data, fit, c.level);
}

AteEstimate with_se(AteEstimate est, std::optional<double> se, double level) {
  est.se = se;
  if (se) {
    const auto [lo, hi] = normal_ci(est.psi_hat, *se, level);
    est.ci_low = lo;
    est.ci_high = hi;
  }
  return est;
}

std::pair<AteEstimate, ojson> estimate_quasi(RunConfig& c) {
  AteEstimate est;
  est.method = c.method;
  ojson diag;
  if (c.method == "did" || c.method == "fe") {
    const PanelDataset panel =
        load_panel_csv(c.input, PanelSchema{c.unit, c.period, c.treatment, c.outcome, c.group});
    est.n = panel.size();
    if (c.method == "did") {
      const DidEstimate did_est = c.placebo ? did_placebo(panel) : did(panel);
      est.method = c.placebo ? "did_placebo" : "did";
      est.psi_hat = did_est.estimate;
      diag["period_before"] = did_est.period_before;
      diag["period_after"] = did_est.period_after;
      diag["cell_means"] = {{"control", {did_est.cell_means[0][0], did_est.cell_means[0][1]}},
                            {"treated", {did_est.cell_means[1][0], did_est.cell_means[1][1]}}};
      diag["cell_counts"] = {{"control", {did_est.cell_counts[0][0], did_est.cell_counts[0][1]}},
                             {"treated", {did_est.cell_counts[1][0], did_est.cell_counts[1][1]}}};
      return {with_se(est, did_est.se, c.level), diag};
    }
    const FeEstimate fe = fe_within(panel);
    est.psi_hat = fe.estimate;
    diag["n_units"] = fe.n_units;
    diag["units_without_variation"] = fe.units_without_variation;
    return {with_se(est, fe.se, c.level), diag};
  }
  if (c.method == "rd") {
    const ObservationalDataset data = load_csv(c.input, CsvSchema{c.treatment, c.outcome, {c.running}});
    const RdEstimate rd = rd_local_linear(data, RdSpec{*c.cutoff, *c.bandwidth, c.kernel, 0});
    est.n = rd.n_left + rd.n_right;
    est.psi_hat = rd.jump;
    diag["n_left"] = rd.n_left;
    diag["n_right"] = rd.n_right;
    diag["intercept_left"] = rd.intercept_left;
    diag["intercept_right"] = rd.intercept_right;
    diag["slope_left"] = rd.slope_left;
    diag["slope_right"] = rd.slope_right;
    diag["kernel"] = name_of(kKernels, c.kernel);
    return {with_se(est, rd.se, c.level), diag};
  }
  // iv, tsls
  const CsvTable table = read_csv_table(c.input);
  if (c.method == "iv") c.covariates.clear();
  if (c.method == "tsls" && c.covariates.empty()) {
    c.covariates = other_columns(table, {c.instrument, c.treatment, c.outcome});
  }
  const IvSchema schema{c.instrument, c.treatment, c.outcome, c.covariates};
  const IvDataset data = load_iv_csv(c.input, schema);
  const IvEstimate iv = c.method == "iv" ? iv_wald(data) : tsls(data);
  est.n = data.size();
  est.psi_hat = iv.late;
  diag["first_stage"] = iv.first_stage;
  diag["reduced_form"] = iv.reduced_form;
  diag["weak_first_stage"] = iv.weak_flag;
  return {with_se(est, iv.se, c.level), diag};
}

ojson diagnostics_json(const AteEstimate& est) {
  const auto& d = est.diagnostics;
  ojson j = ojson::object();
  if (d.clip_count) j["clip_count"] = *d.clip_count;
  if (d.unmatched_count) j["unmatched_count"] = *d.unmatched_count;
  if (!d.fold_means.empty()) j["fold_means"] = d.fold_means;
  if (d.fold_mean_average) j["fold_mean_average"] = *d.fold_mean_average;
  if (d.psi1) j["psi1"] = *d.psi1;
  if (d.psi0) j["psi0"] = *d.psi0;
  return j;
}

std::string run_estimate(RunConfig c) {
  require_input(c);
  AteEstimate est;
  ojson extra = ojson::object();
  if (contains(kObsMethods, c.method)) {
    est = estimate_observational(c);
  } else {
    std::tie(est, extra) = estimate_quasi(c);
  }
  if (c.format == Format::Csv) return ate_report_csv(est);
  ojson report = ate_report(est, c);
  for (auto& [key, value] : extra.items()) report["diagnostics"][key] = value;
  return dump(report);
}

// ---------------------------------------------------------------------------
// montecarlo

ojson mc_row_json(const McRow& row) {
  ojson j;
  j["estimator"] = row.estimator;
  j["successes"] = row.successes;
  j["failures"] = row.failures;
  j["mean"] = row.mean;
  j["bias"] = row.bias;
  j["mc_se"] = row.mc_se;
  j["variance"] = row.variance;
  j["mse"] = row.mse;
  j["coverage"] = opt_json(row.coverage);
  j["mean_se"] = opt_json(row.mean_se);
  j["mean_clip_count"] = row.mean_clip_count;
  j["mean_unmatched"] = row.mean_unmatched;
  return j;
}

std::string run_montecarlo(const RunConfig& c) {
  McConfig mc;
  mc.replications = c.reps;
  mc.n = c.n;
  mc.seed = c.seed;
  mc.learners = learners_of(c);
  mc.k = c.folds;
  mc.clip = ClipBounds{c.clip[0], c.clip[1]};
  mc.level = c.level;
  mc.threads = c.threads;
  mc.estimators.clear();
  for (const auto& e : c.estimators) mc.estimators.push_back(parse_estimator(e));

  std::vector<McReport> reports;
  if (c.scenario == "all") {
    reports = dr_suite(mc);
  } else {
    mc.scenario = parse_scenario(c.scenario);
    reports.push_back(run_mc(mc));
  }
  if (c.format == Format::Csv) return mc_report_csv(reports);

  ojson report;
  report["kind"] = "montecarlo";
  report["reports"] = ojson::array();
  for (const auto& r : reports) {
    ojson jr;
    jr["scenario"] = to_string(r.scenario);
    jr["true_ate"] = r.true_ate;
    jr["replications"] = r.replications;
    jr["n"] = r.n;
    jr["seed"] = r.seed;
    jr["rows"] = ojson::array();
    for (const auto& row : r.rows) jr["rows"].push_back(mc_row_json(row));
    report["reports"].push_back(jr);
  }
  report["config"] = config_json(c);
  report["version"] = version_json();
  return dump(report);
}

// ---------------------------------------------------------------------------
// eif-check

eif::DiscreteMeasure load_measure(const std::string& path, const std::string& prob_column) {
  const CsvTable table = read_csv_table(path);
  const std::size_t ip = table.column(prob_column);
  std::vector<std::string> coords;
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == ip) continue;
    coords.push_back(table.header[j]);
    idx.push_back(j);
  }
  std::vector<eif::Point> points;
  std::vector<double> probs;
  double total = 0.0;
  for (const auto& row : table.rows) {
    eif::Point z;
    for (std::size_t j : idx) z.push_back(row[j]);
    points.push_back(std::move(z));
    probs.push_back(row[ip]);
    total += row[ip];
  }
  // Accept tables written with rounded probabilities.
  if (total > 0.0 && std::abs(total - 1.0) <= 1e-9) {
    for (double& p : probs) p /= total;
  }
  return eif::DiscreteMeasure(std::move(coords), std::move(points), std::move(probs));
}

/// "ate", "cf1", "cf0", "mean:COL", "cond_mean:COL|C1=V1,C2=V2".
eif::Functional parse_functional(const std::string& spec, const RunConfig& c) {
  if (spec == "ate") return eif::Functional::ate(c.treatment, c.outcome);
  if (spec == "cf1") return eif::Functional::counterfactual_mean(1, c.treatment, c.outcome);
  if (spec == "cf0") return eif::Functional::counterfactual_mean(0, c.treatment, c.outcome);
  if (spec.rfind("mean:", 0) == 0) return eif::Functional::mean(spec.substr(5));
  if (spec.rfind("cond_mean:", 0) == 0) {
    const std::string rest = spec.substr(10);
    const auto bar = rest.find('|');
    if (bar == std::string::npos) throw Error(ErrorKind::Usage, "cond_mean needs conditions after '|'");
    std::vector<eif::Condition> conds;
    std::stringstream ss(rest.substr(bar + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::Usage, "condition '" + item + "' is not COL=VALUE");
      double value = 0.0;
      try {
        value = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Usage, "condition '" + item + "' has a non-numeric value");
      }
      conds.push_back({item.substr(0, eq), value});
    }
    return eif::Functional::cond_mean(rest.substr(0, bar), std::move(conds));
  }
  throw Error(ErrorKind::Usage, "unknown --functional '" + spec + "'");
}

std::string run_eif_check(const RunConfig& c) {
  require_input(c);
  const eif::DiscreteMeasure p = load_measure(c.input, c.prob_column);
  const eif::Functional f = parse_functional(c.functional, c);

  ojson report;
  report["kind"] = "eif-check";
  report["functional"] = f.label();
  report["value"] = f(p);

  ojson points = ojson::array();
  std::vector<double> phi(p.size(), 0.0);
  double max_diff = 0.0;
  double eif_mean = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p.probs()[j] == 0.0) continue;
    const auto numerical = eif::gateaux_if(f, p, p.points()[j]);
    const double closed = f.closed_form_influence(p, p.points()[j]);
    phi[j] = numerical.value;
    max_diff = std::max(max_diff, std::abs(numerical.value - closed));
    eif_mean += p.probs()[j] * numerical.value;
    ojson pt;
    ojson coords;
    for (std::size_t k = 0; k < p.coords().size(); ++k) coords[p.coords()[k]] = p.points()[j][k];
    pt["point"] = coords;
    pt["prob"] = p.probs()[j];
    pt["numerical"] = numerical.value;
    pt["closed_form"] = closed;
    pt["abs_diff"] = std::abs(numerical.value - closed);
    pt["error_estimate"] = numerical.error_estimate;
    points.push_back(pt);
  }
  report["points"] = points;
  report["max_abs_diff"] = max_diff;
  report["eif_mean"] = eif_mean;

  // Random mean-zero scores on the support of P.
  Rng rng(c.seed);
  double max_gap = 0.0;
  for (std::size_t s = 0; s < c.scores; ++s) {
    std::vector<double> score(p.size(), 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p.probs()[j] > 0.0) score[j] = 2.0 * rng.uniform() - 1.0;
    }
    const double centre = p.expect(score);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p.probs()[j] > 0.0) score[j] -= centre;
    }
    const double lhs = eif::pathwise_derivative(f, p, score).value;
    double rhs = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) rhs += p.probs()[j] * phi[j] * score[j];
    max_gap = std::max(max_gap, std::abs(lhs - rhs));
  }
  report["central_identity"] = {{"scores", c.scores}, {"max_gap", max_gap}};

  if (!c.estimate_measure.empty()) {
    const eif::DiscreteMeasure q = load_measure(c.estimate_measure, c.prob_column);
    ojson rem;
    rem["plug_in_remainder"] = eif::plug_in_remainder(f, p, q);
    if (f.kind() == eif::Functional::Kind::Ate) {
      const auto r2 = eif::second_order_remainder(p, q, c.treatment, c.outcome);
      const auto arm = [](const eif::ArmRemainder& a) {
        return ojson{{"r2", a.r2}, {"bound", a.bound}, {"unweighted_product", a.unweighted_product}};
      };
      rem["r2"] = r2.r2;
      rem["bound"] = r2.bound;
      rem["within_bound"] = r2.within_bound;
      rem["arm1"] = arm(r2.arm1);
      rem["arm0"] = arm(r2.arm0);
    }
    report["remainder"] = rem;
  }
  report["config"] = config_json(c);
  report["version"] = version_json();
  return dump(report);
}

// ---------------------------------------------------------------------------
// Argument parsing

void add_common(CLI::App& app, RunConfig& c) {
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--level", c.level, "Confidence level")->capture_default_str()->check(CLI::Range(0.5, 0.9999));
  app.add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--format", c.format, "Report format")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case))
      ->capture_default_str();
  app.add_option("-k,--folds,--crossfit.k", c.folds, "Cross-fitting folds")->capture_default_str();
  app.add_option("--clip,--crossfit.clip", c.clip, "Propensity clip bounds LO HI")
      ->expected(2)
      ->capture_default_str();
  app.add_option("--propensity-lambda,--propensity.lambda", c.propensity_lambda,
                 "Ridge penalty of the propensity model")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--propensity-features,--propensity.features", c.propensity_features, "linear or quadratic")
      ->transform(CLI::CheckedTransformer(kFeatureMaps, CLI::ignore_case));
  app.add_option("--outcome-lambda,--outcome.lambda", c.outcome_lambda, "Ridge penalty of the outcome models")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--outcome-features,--outcome.features", c.outcome_features, "linear or quadratic")
      ->transform(CLI::CheckedTransformer(kFeatureMaps, CLI::ignore_case));
  app.add_option("--treatment", c.treatment, "Treatment column")->capture_default_str();
  app.add_option("--outcome", c.outcome, "Outcome column")->capture_default_str();
}

void validate(const RunConfig& c, const CLI::App& estimate) {
  if (!(c.clip[0] > 0.0 && c.clip[0] < c.clip[1] && c.clip[1] < 1.0)) {
    throw Error(ErrorKind::Usage, "--clip LO HI must satisfy 0 < LO < HI < 1");
  }
  if (c.folds < 2) throw Error(ErrorKind::Usage, "--folds must be at least 2");
  if (c.subcommand == Subcommand::Estimate) {
    if (c.method == "rd") {
      if (!c.cutoff) throw Error(ErrorKind::Usage, "--method rd requires --cutoff");
      if (!c.bandwidth) throw Error(ErrorKind::Usage, "--method rd requires --bandwidth");
    }
    if (c.placebo && c.method != "did") throw Error(ErrorKind::Usage, "--placebo applies only to --method did");
    if (estimate.count("--kernel") > 0 && c.method != "rd") {
      throw Error(ErrorKind::Usage, "--kernel applies only to --method rd");
    }
    if ((c.caliper || c.with_replacement) && c.method != "psm") {
      throw Error(ErrorKind::Usage, "--caliper and --with-replacement apply only to --method psm");
    }
  }
  if (c.subcommand == Subcommand::MonteCarlo) {
    if (c.reps < 2) throw Error(ErrorKind::Usage, "--reps must be at least 2");
    if (c.scenario != "all") {
      try {
        parse_scenario(c.scenario);
      } catch (const Error&) {
        throw Error(ErrorKind::Usage, "unknown --scenario '" + c.scenario + "'");
      }
    }
    for (const auto& e : c.estimators) {
      try {
        parse_estimator(e);
      } catch (const Error&) {
        throw Error(ErrorKind::Usage, "unknown estimator '" + e + "' in --estimators");
      }
    }
  }
}

}  // namespace

std::string version() { return CAUSAL_VERSION; }

std::string_view to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Simulate: return "simulate";
    case Subcommand::Estimate: return "estimate";
    case Subcommand::MonteCarlo: return "montecarlo";
    case Subcommand::EifCheck: return "eif-check";
  }
  return "unknown";
}

RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig c;
  CLI::App app{"Causal effect estimation toolkit", "causal"};
  app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");
  // Keys such as propensity.lambda are flat names, not sections.
  auto format = std::make_shared<CLI::ConfigTOML>();
  format->parentSeparator('/');
  app.config_formatter(format);
  app.require_subcommand(1);
  app.set_version_flag("--version", version());
  add_common(app, c);

  auto* simulate = app.add_subcommand("simulate", "Draw a dataset with known ground truth")->fallthrough();
  simulate->add_option("--dgp", c.dgp, "observational, dr, iv, panel or rd")
      ->check(CLI::IsMember(kDgps))
      ->capture_default_str();
  simulate->add_option("-o,--output", c.output, "Dataset CSV path")->required();
  simulate->add_option("--truth", c.truth_output, "Ground-truth CSV path (default <output>.truth.csv)");
  simulate->add_option("-n,--n", c.n, "Units")->capture_default_str();
  simulate->add_option("-d,--dim", c.d, "Covariates (observational)")->capture_default_str();
  simulate->add_option("--confounding", c.confounding, "Propensity slope (observational)")->capture_default_str();
  simulate->add_option("--tau", c.tau, "Treatment effect")->capture_default_str();
  simulate->add_option("--strength", c.strength, "First-stage strength (iv)")->capture_default_str();
  simulate->add_option("--units", c.units, "Units (panel)")->capture_default_str();
  simulate->add_option("--periods", c.periods, "Periods (panel)")->capture_default_str();
  simulate->add_option("--violation", c.violation, "Parallel-trends violation slope (panel)")
      ->capture_default_str();
  simulate->add_option("--cutoff", c.cutoff, "Cutoff (rd)");
  simulate->add_option("--instrument", c.instrument, "Instrument column")->capture_default_str();
  simulate->add_option("--unit", c.unit, "Unit column")->capture_default_str();
  simulate->add_option("--period", c.period, "Period column")->capture_default_str();
  simulate->add_option("--group", c.group, "Group column")->capture_default_str();

  auto* estimate = app.add_subcommand("estimate", "Estimate a causal effect from a CSV file")->fallthrough();
  estimate->add_option("-m,--method", c.method, "Estimator")->required()->check(CLI::IsMember(kMethods));
  estimate->add_option("-i,--input", c.input, "Input CSV")->required();
  estimate->add_option("-o,--output", c.output, "Report path ('-' = stdout)")->capture_default_str();
  estimate->add_option("--covariates", c.covariates, "Covariate columns (default: all other columns)")
      ->delimiter(',');
  estimate->add_option("--instrument", c.instrument, "Instrument column")->capture_default_str();
  estimate->add_option("--unit", c.unit, "Unit column")->capture_default_str();
  estimate->add_option("--period", c.period, "Period column")->capture_default_str();
  estimate->add_option("--group", c.group, "Group column")->capture_default_str();
  estimate->add_option("--running", c.running, "Running-variable column (rd)")->capture_default_str();
  estimate->add_option("--cutoff", c.cutoff, "RD cutoff");
  estimate->add_option("--bandwidth", c.bandwidth, "RD bandwidth")->check(CLI::PositiveNumber);
  estimate->add_option("--kernel", c.kernel, "rectangular or triangular")
      ->transform(CLI::CheckedTransformer(kKernels, CLI::ignore_case));
  estimate->add_flag("--placebo", c.placebo, "Placebo DID on the last two pre-treatment periods");
  estimate->add_option("--caliper", c.caliper, "Matching caliper on the propensity")->check(CLI::PositiveNumber);
  estimate->add_flag("--with-replacement", c.with_replacement, "Match controls with replacement");

  auto* montecarlo = app.add_subcommand("montecarlo", "Replicated simulation of the DR scenarios")->fallthrough();
  montecarlo->add_option("--scenario", c.scenario, "both_correct, pi_wrong, mu_wrong, both_wrong or all")
      ->capture_default_str();
  montecarlo->add_option("--reps", c.reps, "Replications")->capture_default_str();
  montecarlo->add_option("-n,--n", c.n, "Units per replication")->capture_default_str();
  montecarlo->add_option("--estimators", c.estimators, "Estimators (comma separated)")->delimiter(',');
  montecarlo->add_option("-o,--output", c.output, "Report path ('-' = stdout)")->capture_default_str();

  auto* eif_check = app.add_subcommand("eif-check", "Check influence functions on a discrete measure")->fallthrough();
  eif_check->add_option("-i,--input", c.input, "Measure CSV (coordinates plus a probability column)")
      ->required();
  eif_check->add_option("--functional", c.functional, "ate, cf1, cf0, mean:COL or cond_mean:COL|C=V,...")
      ->capture_default_str();
  eif_check->add_option("--estimate", c.estimate_measure, "Estimated measure for remainder checks");
  eif_check->add_option("--prob-column", c.prob_column, "Probability column")->capture_default_str();
  eif_check->add_option("--scores", c.scores, "Random scores for the central identity")->capture_default_str();
  eif_check->add_option("-o,--output", c.output, "Report path ('-' = stdout)")->capture_default_str();

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested(version() + "\n");
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorKind::Usage, e.what());
  }

  if (simulate->parsed()) c.subcommand = Subcommand::Simulate;
  if (estimate->parsed()) c.subcommand = Subcommand::Estimate;
  if (montecarlo->parsed()) {
    c.subcommand = Subcommand::MonteCarlo;
    if (montecarlo->count("--n") == 0) c.n = 2000;
  }
  if (eif_check->parsed()) c.subcommand = Subcommand::EifCheck;
  validate(c, *estimate);
  return c;
}

ojson config_json(const RunConfig& c) {
  ojson j;
  j["subcommand"] = to_string(c.subcommand);
  j["seed"] = c.seed;
  j["level"] = c.level;
  j["format"] = name_of(kFormats, c.format);
  switch (c.subcommand) {
    case Subcommand::Simulate:
      j["dgp"] = c.dgp;
      j["output"] = c.output;
      j["n"] = c.n;
      if (c.dgp == "observational") {
        j["dim"] = c.d;
        j["confounding"] = c.confounding;
      }
      j["tau"] = c.tau;
      if (c.dgp == "iv") j["strength"] = c.strength;
      if (c.dgp == "panel") {
        j["units"] = c.units;
        j["periods"] = c.periods;
        j["violation"] = c.violation;
      }
      if (c.dgp == "rd") j["cutoff"] = c.cutoff.value_or(0.0);
      break;
    case Subcommand::Estimate:
      j["method"] = c.method;
      j["input"] = c.input;
      j["treatment"] = c.treatment;
      j["outcome"] = c.outcome;
      if (contains(kObsMethods, c.method) || c.method == "tsls") j["covariates"] = c.covariates;
      if (contains(kObsMethods, c.method) && c.method != "naive") {
        j["folds"] = c.folds;
        j["clip"] = {c.clip[0], c.clip[1]};
        j["propensity"] = {{"lambda", c.propensity_lambda},
                           {"features", name_of(kFeatureMaps, c.propensity_features)}};
        j["outcome_model"] = {{"lambda", c.outcome_lambda},
                              {"features", name_of(kFeatureMaps, c.outcome_features)}};
      }
      if (c.method == "psm") {
        j["caliper"] = opt_json(c.caliper);
        j["with_replacement"] = c.with_replacement;
      }
      if (c.method == "did" || c.method == "fe") {
        j["unit"] = c.unit;
        j["period"] = c.period;
        j["group"] = c.group;
        if (c.method == "did") j["placebo"] = c.placebo;
      }
      if (c.method == "rd") {
        j["running"] = c.running;
        j["cutoff"] = opt_json(c.cutoff);
        j["bandwidth"] = opt_json(c.bandwidth);
        j["kernel"] = name_of(kKernels, c.kernel);
      }
      if (c.method == "iv" || c.method == "tsls") j["instrument"] = c.instrument;
      break;
    case Subcommand::MonteCarlo:
      j["scenario"] = c.scenario;
      j["reps"] = c.reps;
      j["n"] = c.n;
      j["estimators"] = c.estimators;
      j["folds"] = c.folds;
      j["clip"] = {c.clip[0], c.clip[1]};
      j["propensity_lambda"] = c.propensity_lambda;
      j["outcome_lambda"] = c.outcome_lambda;
      break;
    case Subcommand::EifCheck:
      j["input"] = c.input;
      j["functional"] = c.functional;
      j["estimate"] = c.estimate_measure;
      j["prob_column"] = c.prob_column;
      j["treatment"] = c.treatment;
      j["outcome"] = c.outcome;
      j["scores"] = c.scores;
      break;
  }
  return j;
}

ojson ate_report(const AteEstimate& est, const RunConfig& config) {
  ojson j;
  j["method"] = est.method;
  j["psi_hat"] = est.psi_hat;
  j["se"] = opt_json(est.se);
  j["ci_low"] = opt_json(est.ci_low);
  j["ci_high"] = opt_json(est.ci_high);
  j["n"] = est.n;
  j["diagnostics"] = diagnostics_json(est);
  j["config"] = config_json(config);
  j["version"] = version_json();
  return j;
}

std::string ate_report_csv(const AteEstimate& est) {
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string out = "method,psi_hat,se,ci_low,ci_high,n\n";
  out += est.method + ',' + format_double(est.psi_hat) + ',' + opt(est.se) + ',' + opt(est.ci_low) + ',' +
         opt(est.ci_high) + ',' + std::to_string(est.n) + '\n';
  return out;
}

std::string run(const RunConfig& config) {
  switch (config.subcommand) {
    case Subcommand::Simulate: return run_simulate(config);
    case Subcommand::Estimate: return run_estimate(config);
    case Subcommand::MonteCarlo: return run_montecarlo(config);
    case Subcommand::EifCheck: return run_eif_check(config);
  }
  throw Error(ErrorKind::Usage, "no subcommand");
}

void emit_report(const std::string& report, const std::string& path, std::ostream& stdout_stream) {
  if (path == "-") {
    stdout_stream << report;
    stdout_stream.flush();
    return;
  }
  write_text_file(path, report);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Config: return 1;
    case ErrorKind::Separation:
    case ErrorKind::Rank:
    case ErrorKind::Identification:
    case ErrorKind::Numerical: return 3;
    default: return 2;
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const std::vector<std::string> args(argv, argv + argc);
  try {
    const RunConfig config = parse_args(args);
    // simulate writes its data files itself and reports to stdout.
    const std::string report = run(config);
    emit_report(report, config.subcommand == Subcommand::Simulate ? "-" : config.output, out);
    return 0;
  } catch (const HelpRequested& help) {
    out << help.what();
    return 0;
  } catch (const Error& e) {
    const ojson j{{"error", to_string(e.kind())}, {"message", e.what()}};
    err << j.dump() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    const ojson j{{"error", "internal"}, {"message", e.what()}};
    err << j.dump() << '\n';
    return 3;
  }
}

}  // namespace causal::cli
