#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "causal/data.hpp"
#include "causal/nuisance.hpp"

namespace causal {

inline constexpr double kDefaultLevel = 0.95;

/// mean(y | a=1) - mean(y | a=0) with the two-sample (Welch) standard error.
AteEstimate naive_dim(const ObservationalDataset& data, double level = kDefaultLevel);

enum class IpwNormalization { HorvitzThompson, Hajek };

/// Inverse probability weighting. Horvitz-Thompson:
///   mean(a y / pi) - mean((1-a) y / (1-pi));
/// Hajek normalizes the weights to sum to one within each arm.
AteEstimate ipw(const ObservationalDataset& data, std::span<const double> pi_hat,
                IpwNormalization normalization = IpwNormalization::HorvitzThompson,
                double level = kDefaultLevel);

/// Outcome-regression plug-in mean(mu1_hat - mu0_hat). No standard error.
AteEstimate g_formula(const ObservationalDataset& data, std::span<const double> mu0_hat,
                      std::span<const double> mu1_hat);

struct MatchSpec {
  std::optional<double> caliper;  // absent = no caliper
  bool with_replacement = false;
};

struct MatchResult {
  AteEstimate att;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (treated index, control index)
  std::vector<std::size_t> unmatched_treated;
};

/// Greedy one-to-one nearest-propensity matching of treated to controls.
///
/// Treated units are visited in index order; each takes the control with the
/// smallest |pi_t - pi_c| (ties to the lowest control index) within the caliper.
/// Without replacement a used control leaves the pool. Reports the ATT.
MatchResult psm_att(const ObservationalDataset& data, std::span<const double> pi_hat,
                    const MatchSpec& spec = {}, double level = kDefaultLevel);

/// Cross-fitted augmented IPW (doubly robust) estimate:
///   psi = mean_i[ a(y - mu1)/pi - (1-a)(y - mu0)/(1-pi) + mu1 - mu0 ].
/// Stores the centered per-unit influence values, the arm means psi1/psi0,
/// per-fold means and their average.
AteEstimate aipw(const ObservationalDataset& data, const NuisanceFit& nuisance,
                 double level = kDefaultLevel);

/// Efficient influence function of the ATE evaluated at the fitted nuisances.
std::vector<double> eif_closed_form(const ObservationalDataset& data, const NuisanceFit& nuisance,
                                    double psi_hat);

struct VarianceCi {
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// se = sd(eif) / sqrt(n) (n-1 divisor); normal CI psi_hat +/- z * se.
VarianceCi variance_ci(std::span<const double> eif, double psi_hat, double level = kDefaultLevel);

}  // namespace causal
