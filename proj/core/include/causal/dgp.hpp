#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "causal/data.hpp"

namespace causal {

enum class OutcomeForm { Linear, LinearPlusQuadratic };
enum class PropensityForm { LogisticLinear, LogisticQuadratic };

/// Observational DGP.
///
///   X_j ~ N(0, 1), j < d
///   logit P(A=1|X) = confounding_strength * sum_j X_j
///                    [+ propensity_quadratic * sum_j (X_j^2 - 1)]      (LogisticQuadratic)
///   Y(0) = outcome_intercept + outcome_slope * sum_j X_j
///          [+ outcome_quadratic * sum_j X_j^2]                         (LinearPlusQuadratic)
///          + N(0, outcome_noise_sd^2)
///   Y(1) = Y(0) + tau0 + <tau_x, X>
///
/// The population ATE is tau0 because E[X] = 0.
struct ObsDgpConfig {
  std::size_t n = 1000;
  std::size_t d = 1;
  double confounding_strength = 0.0;
  PropensityForm propensity_form = PropensityForm::LogisticLinear;
  double propensity_quadratic = 0.0;
  double tau0 = 0.0;
  std::vector<double> tau_x;  // empty means constant effect
  double outcome_intercept = 0.0;
  double outcome_slope = 1.0;
  OutcomeForm outcome_form = OutcomeForm::Linear;
  double outcome_quadratic = 0.0;
  double outcome_noise_sd = 1.0;

  void validate() const;
  double population_ate() const { return tau0; }
};

struct ObsSimulation {
  ObservationalDataset data;
  GroundTruth truth;
};

ObsSimulation generate_observational(const ObsDgpConfig& config, std::uint64_t seed);

/// Sidecar columns y1, y0, propensity.
std::string ground_truth_csv(const GroundTruth& truth);

// ---------------------------------------------------------------------------

enum class ComplianceType { AlwaysTaker = 0, Complier = 1, NeverTaker = 2, Defier = 3 };

std::string_view to_string(ComplianceType type);

/// Instrumental-variable DGP with latent compliance types.
///
///   type ~ Categorical(p_always, p_complier, p_never, p_defier)
///   Z ~ Bernoulli(instrument_prob)
///   A = 1 for always-takers, Z for compliers, 0 for never-takers, 1-Z for defiers
///   Y(0) = baseline_by_type[type] + covariate_effect * sum_j X_j + N(0, noise_sd^2)
///   Y(1) = Y(0) + effect_by_type[type]
struct IvDgpConfig {
  std::size_t n = 1000;
  double p_always = 0.0;
  double p_complier = 1.0;
  double p_never = 0.0;
  double p_defier = 0.0;
  bool allow_defiers = false;
  std::array<double, 4> effect_by_type{0.0, 1.0, 0.0, 0.0};
  std::array<double, 4> baseline_by_type{0.0, 0.0, 0.0, 0.0};
  double instrument_prob = 0.5;
  double noise_sd = 1.0;
  std::size_t d = 0;
  double covariate_effect = 0.0;

  void validate() const;
  /// E[A|Z=1] - E[A|Z=0] in the population.
  double first_stage_strength() const { return p_complier - p_defier; }
  double true_late() const { return effect_by_type[static_cast<std::size_t>(ComplianceType::Complier)]; }

  /// Copy with p_complier = strength, no defiers, and the remaining mass split
  /// between always- and never-takers in their current proportion (even split if both are zero).
  IvDgpConfig with_first_stage_strength(double strength) const;
};

struct IvSimulation {
  IvDataset data;
  std::vector<ComplianceType> types;
  std::vector<double> y1;
  std::vector<double> y0;
  double true_late = 0.0;
};

IvSimulation generate_iv(const IvDgpConfig& config, std::uint64_t seed);

/// Sidecar columns y1, y0, type.
std::string iv_ground_truth_csv(const IvSimulation& sim);

// ---------------------------------------------------------------------------

/// Panel DGP: periods 0..n_periods-1, the last one is the only post period.
/// Units with index < n_units/2 are controls (group 0), the rest are treated (group 1).
///
///   y_it = alpha_i + group_effect*g_i + time_trend*t + parallel_violation*g_i*t
///          + treatment_effect*g_i*1[t = T-1] + N(0, noise_sd^2)
///   alpha_i ~ N(unit_effect_mean, unit_effect_sd^2), drawn once per dataset
struct PanelDgpConfig {
  std::size_t n_units = 100;
  std::size_t n_periods = 2;
  double group_effect = 0.0;
  double time_trend = 0.0;
  double treatment_effect = 0.0;
  double parallel_violation = 0.0;
  double unit_effect_mean = 0.0;
  double unit_effect_sd = 0.0;
  double noise_sd = 1.0;

  void validate() const;
};

struct PanelSimulation {
  PanelDataset data;
  std::vector<double> unit_effects;  // alpha_i in unit order
  double true_effect = 0.0;
};

PanelSimulation generate_panel(const PanelDgpConfig& config, std::uint64_t seed);

/// Sidecar columns unit, alpha.
std::string panel_ground_truth_csv(const PanelSimulation& sim);

// ---------------------------------------------------------------------------

/// Sharp RD DGP. The running variable is covariate column 0 ("r").
///
///   r ~ Uniform(cutoff - half_width, cutoff + half_width), A = 1[r >= cutoff]
///   Y(0) = intercept + slope_left*(r - c) + e,  Y(1) = intercept + jump + slope_right*(r - c) + e
struct RdDgpConfig {
  std::size_t n = 1000;
  double cutoff = 0.0;
  double half_width = 1.0;
  double jump = 0.0;
  double intercept = 0.0;
  double slope_left = 0.0;
  double slope_right = 0.0;
  double noise_sd = 1.0;

  void validate() const;
};

struct RdSimulation {
  ObservationalDataset data;
  GroundTruth truth;
  double true_jump = 0.0;
};

RdSimulation generate_rd(const RdDgpConfig& config, std::uint64_t seed);

}  // namespace causal
