#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "causal/data.hpp"
#include "causal/dgp.hpp"

namespace causal {

// Difference in differences ---------------------------------------------------

struct DidEstimate {
  double estimate = 0.0;
  /// cell_means[group][period_slot]: slot 0 is the earlier period, slot 1 the later one.
  std::array<std::array<double, 2>, 2> cell_means{};
  std::array<std::array<std::size_t, 2>, 2> cell_counts{};
  std::int64_t period_before = 0;
  std::int64_t period_after = 0;
  std::optional<double> se;

  /// (m11 - m10) - (m01 - m00) from the stored cell means.
  double from_cells() const;
};

/// 2x2 DID on the first and last observed periods.
DidEstimate did(const PanelDataset& panel);

/// DID between two explicit periods (the group flag defines arms).
DidEstimate did_between(const PanelDataset& panel, std::int64_t before, std::int64_t after);

/// Placebo DID on the last two pre-treatment periods (periods where no record is treated).
/// Needs at least two pre-treatment periods.
DidEstimate did_placebo(const PanelDataset& panel);

// Regression discontinuity ---------------------------------------------------

enum class Kernel { Rectangular, Triangular };

struct RdSpec {
  double cutoff = 0.0;
  double bandwidth = 1.0;
  Kernel kernel = Kernel::Rectangular;
  std::size_t running_column = 0;
};

struct RdEstimate {
  double jump = 0.0;
  double intercept_left = 0.0;
  double intercept_right = 0.0;
  double slope_left = 0.0;
  double slope_right = 0.0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  std::optional<double> se;
};

/// Sharp RD by local-linear weighted least squares of y on (1, r - c) on each side
/// within |r - c| <= h; jump = intercept_right - intercept_left. Points with zero
/// kernel weight are not counted; each side needs two.
RdEstimate rd_local_linear(const ObservationalDataset& data, const RdSpec& spec);

// Instrumental variables -------------------------------------------------------

inline constexpr double kWeakFirstStage = 0.05;

struct IvEstimate {
  double late = 0.0;
  double first_stage = 0.0;
  double reduced_form = 0.0;
  std::optional<double> se;
  bool weak_flag = false;
};

/// Wald estimator: (E[y|z=1] - E[y|z=0]) / (E[a|z=1] - E[a|z=0]).
IvEstimate iv_wald(const IvDataset& iv);

/// Just-identified 2SLS with the dataset's covariates in both stages.
/// Stage 1: a on (1, z, x). Stage 2: y on (1, a_hat, x). HC0 standard error.
IvEstimate tsls(const IvDataset& iv);

struct WeakIvRow {
  double strength = 0.0;
  double median_late = 0.0;
  double median_ci_width = 0.0;
  double median_bias = 0.0;
  std::size_t failures = 0;
};

struct WeakIvStudyConfig {
  IvDgpConfig base;
  std::vector<double> strengths;
  std::size_t replications = 200;
  double level = 0.95;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

/// Monte Carlo over a grid of first-stage strengths. Replication r of grid point g
/// uses seed + g * replications + r.
std::vector<WeakIvRow> weak_iv_study(const WeakIvStudyConfig& config, std::uint64_t seed);

// Fixed effects ------------------------------------------------------------

struct FeEstimate {
  double estimate = 0.0;
  std::optional<double> se;
  std::size_t n_units = 0;
  std::size_t units_without_variation = 0;
  std::size_t n_obs = 0;
};

/// Within estimator: pooled OLS of (y - ybar_i) on (a - abar_i).
FeEstimate fe_within(const PanelDataset& panel);

}  // namespace causal
