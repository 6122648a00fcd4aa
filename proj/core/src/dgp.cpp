#include "causal/dgp.hpp"

#include <cmath>
#include <string>

#include "causal/error.hpp"
#include "causal/rng.hpp"
#include "causal/stats.hpp"

namespace causal {

void ObsDgpConfig::validate() const {
  if (n < 1) throw Error(ErrorKind::Config, "n must be at least 1");
  if (!(outcome_noise_sd >= 0.0)) throw Error(ErrorKind::Config, "outcome_noise_sd must be >= 0");
  if (!tau_x.empty() && tau_x.size() != d) {
    throw Error(ErrorKind::Config, "tau_x must be empty or have d entries");
  }
}

ObsSimulation generate_observational(const ObsDgpConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t n = config.n;
  const std::size_t d = config.d;

  std::vector<double> cov(n * d);
  std::vector<int> a(n);
  std::vector<double> y(n);
  std::vector<double> y1(n);
  std::vector<double> y0(n);
  std::vector<double> pi(n);

  for (std::size_t i = 0; i < n; ++i) {
    double sum_x = 0.0;
    double sum_sq = 0.0;
    double effect = config.tau0;
    for (std::size_t j = 0; j < d; ++j) {
      const double xj = rng.normal();
      cov[i * d + j] = xj;
      sum_x += xj;
      sum_sq += xj * xj;
      if (!config.tau_x.empty()) effect += config.tau_x[j] * xj;
    }
    double logit = config.confounding_strength * sum_x;
    if (config.propensity_form == PropensityForm::LogisticQuadratic) {
      logit += config.propensity_quadratic * (sum_sq - static_cast<double>(d));
    }
    pi[i] = stats::logistic(logit);
    a[i] = rng.bernoulli(pi[i]) ? 1 : 0;

    double base = config.outcome_intercept + config.outcome_slope * sum_x;
    if (config.outcome_form == OutcomeForm::LinearPlusQuadratic) base += config.outcome_quadratic * sum_sq;
    y0[i] = base + config.outcome_noise_sd * rng.normal();
    y1[i] = y0[i] + effect;
    y[i] = a[i] == 1 ? y1[i] : y0[i];
  }

  ObsSimulation sim{ObservationalDataset(d, std::move(cov), std::move(a), std::move(y)),
                    GroundTruth::from_potential_outcomes(std::move(y1), std::move(y0), std::move(pi))};
  return sim;
}

std::string ground_truth_csv(const GroundTruth& truth) {
  std::string out = "y1,y0,propensity\n";
  for (std::size_t i = 0; i < truth.y1.size(); ++i) {
    out += format_double(truth.y1[i]) + "," + format_double(truth.y0[i]) + ",";
    out += truth.propensity.empty() ? std::string() : format_double(truth.propensity[i]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ComplianceType type) {
  switch (type) {
    case ComplianceType::AlwaysTaker: return "always";
    case ComplianceType::Complier: return "complier";
    case ComplianceType::NeverTaker: return "never";
    case ComplianceType::Defier: return "defier";
  }
  return "unknown";
}

void IvDgpConfig::validate() const {
  if (n < 1) throw Error(ErrorKind::Config, "n must be at least 1");
  for (double p : {p_always, p_complier, p_never, p_defier}) {
    if (!(p >= 0.0)) throw Error(ErrorKind::Config, "compliance probabilities must be non-negative");
  }
  if (std::abs(p_always + p_complier + p_never + p_defier - 1.0) > 1e-12) {
    throw Error(ErrorKind::Config, "compliance probabilities must sum to 1");
  }
  if (p_defier > 0.0 && !allow_defiers) {
    throw Error(ErrorKind::Config, "p_defier > 0 violates monotonicity; set allow_defiers to study it");
  }
  if (!(instrument_prob > 0.0 && instrument_prob < 1.0)) {
    throw Error(ErrorKind::Config, "instrument_prob must lie in (0, 1)");
  }
  if (!(noise_sd >= 0.0)) throw Error(ErrorKind::Config, "noise_sd must be >= 0");
}

IvDgpConfig IvDgpConfig::with_first_stage_strength(double strength) const {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw Error(ErrorKind::Config, "first-stage strength must lie in [0, 1]");
  }
  IvDgpConfig out = *this;
  const double rest = p_always + p_never;
  const double share_always = rest > 0.0 ? p_always / rest : 0.5;
  out.p_complier = strength;
  out.p_defier = 0.0;
  out.p_always = (1.0 - strength) * share_always;
  out.p_never = 1.0 - strength - out.p_always;
  return out;
}

IvSimulation generate_iv(const IvDgpConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  IvSimulation sim;
  sim.true_late = config.true_late();
  sim.types.reserve(config.n);
  sim.y1.reserve(config.n);
  sim.y0.reserve(config.n);
  std::vector<IvRecord> records;
  records.reserve(config.n);

  const double c1 = config.p_always;
  const double c2 = c1 + config.p_complier;
  const double c3 = c2 + config.p_never;
  for (std::size_t i = 0; i < config.n; ++i) {
    const double u = rng.uniform();
    ComplianceType type = ComplianceType::Defier;
    if (u < c1) {
      type = ComplianceType::AlwaysTaker;
    } else if (u < c2) {
      type = ComplianceType::Complier;
    } else if (u < c3 || config.p_defier == 0.0) {
      type = ComplianceType::NeverTaker;
    }
    IvRecord r;
    r.z = rng.bernoulli(config.instrument_prob) ? 1 : 0;
    switch (type) {
      case ComplianceType::AlwaysTaker: r.a = 1; break;
      case ComplianceType::Complier: r.a = r.z; break;
      case ComplianceType::NeverTaker: r.a = 0; break;
      case ComplianceType::Defier: r.a = 1 - r.z; break;
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < config.d; ++j) {
      const double xj = rng.normal();
      r.x.push_back(xj);
      shift += config.covariate_effect * xj;
    }
    const auto t = static_cast<std::size_t>(type);
    const double y0 = config.baseline_by_type[t] + shift + config.noise_sd * rng.normal();
    const double y1 = y0 + config.effect_by_type[t];
    r.y = r.a == 1 ? y1 : y0;
    sim.types.push_back(type);
    sim.y1.push_back(y1);
    sim.y0.push_back(y0);
    records.push_back(std::move(r));
  }
  sim.data = IvDataset(std::move(records));
  return sim;
}

std::string iv_ground_truth_csv(const IvSimulation& sim) {
  std::string out = "y1,y0,type\n";
  for (std::size_t i = 0; i < sim.y1.size(); ++i) {
    out += format_double(sim.y1[i]) + "," + format_double(sim.y0[i]) + "," +
           std::to_string(static_cast<int>(sim.types[i])) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

void PanelDgpConfig::validate() const {
  if (n_units < 2) throw Error(ErrorKind::Config, "panel needs at least two units");
  if (n_periods < 2) throw Error(ErrorKind::Config, "panel needs at least two periods");
  if (!(noise_sd >= 0.0) || !(unit_effect_sd >= 0.0)) {
    throw Error(ErrorKind::Config, "standard deviations must be >= 0");
  }
}

PanelSimulation generate_panel(const PanelDgpConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  PanelSimulation sim;
  sim.true_effect = config.treatment_effect;
  std::vector<PanelRecord> records;
  records.reserve(config.n_units * config.n_periods);
  const std::size_t first_treated = config.n_units / 2;
  const auto last = static_cast<std::int64_t>(config.n_periods) - 1;
  for (std::size_t u = 0; u < config.n_units; ++u) {
    const int g = u >= first_treated ? 1 : 0;
    const double alpha = config.unit_effect_mean + config.unit_effect_sd * rng.normal();
    sim.unit_effects.push_back(alpha);
    for (std::int64_t t = 0; t <= last; ++t) {
      const int treated = (g == 1 && t == last) ? 1 : 0;
      const double td = static_cast<double>(t);
      const double y = alpha + config.group_effect * g + config.time_trend * td +
                       config.parallel_violation * g * td + config.treatment_effect * treated +
                       config.noise_sd * rng.normal();
      records.push_back({static_cast<std::int64_t>(u), t, treated, y, g});
    }
  }
  sim.data = PanelDataset(std::move(records));
  return sim;
}

std::string panel_ground_truth_csv(const PanelSimulation& sim) {
  std::string out = "unit,alpha\n";
  for (std::size_t u = 0; u < sim.unit_effects.size(); ++u) {
    out += std::to_string(u) + "," + format_double(sim.unit_effects[u]) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

void RdDgpConfig::validate() const {
  if (n < 1) throw Error(ErrorKind::Config, "n must be at least 1");
  if (!(half_width > 0.0)) throw Error(ErrorKind::Config, "half_width must be > 0");
  if (!(noise_sd >= 0.0)) throw Error(ErrorKind::Config, "noise_sd must be >= 0");
}

RdSimulation generate_rd(const RdDgpConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  std::vector<double> r(config.n);
  std::vector<int> a(config.n);
  std::vector<double> y(config.n);
  std::vector<double> y1(config.n);
  std::vector<double> y0(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    r[i] = config.cutoff + config.half_width * (2.0 * rng.uniform() - 1.0);
    a[i] = r[i] >= config.cutoff ? 1 : 0;
    const double centered = r[i] - config.cutoff;
    const double noise = config.noise_sd * rng.normal();
    y0[i] = config.intercept + config.slope_left * centered + noise;
    y1[i] = config.intercept + config.jump + config.slope_right * centered + noise;
    y[i] = a[i] == 1 ? y1[i] : y0[i];
  }
  RdSimulation sim{ObservationalDataset(1, std::move(r), std::move(a), std::move(y), {"r"}),
                   GroundTruth::from_potential_outcomes(std::move(y1), std::move(y0)), config.jump};
  return sim;
}

}  // namespace causal
