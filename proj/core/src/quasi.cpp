#include "causal/quasi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "causal/error.hpp"
#include "causal/parallel.hpp"
#include "causal/regression.hpp"
#include "causal/stats.hpp"

namespace causal {

// ---------------------------------------------------------------------------
// DID

double DidEstimate::from_cells() const {
  return (cell_means[1][1] - cell_means[1][0]) - (cell_means[0][1] - cell_means[0][0]);
}

DidEstimate did_between(const PanelDataset& panel, std::int64_t before, std::int64_t after) {
  if (before == after) throw Error(ErrorKind::Config, "DID needs two distinct periods");
  std::array<std::array<std::vector<double>, 2>, 2> cells;
  for (const auto& r : panel.records()) {
    if (r.period == before) cells[static_cast<std::size_t>(r.group)][0].push_back(r.y);
    if (r.period == after) cells[static_cast<std::size_t>(r.group)][1].push_back(r.y);
  }
  DidEstimate est;
  est.period_before = before;
  est.period_after = after;
  double var = 0.0;
  bool have_var = true;
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t t = 0; t < 2; ++t) {
      const auto& cell = cells[g][t];
      if (cell.empty()) {
        throw Error(ErrorKind::Cell, "empty cell (group " + std::to_string(g) + ", period " +
                                         std::to_string(t == 0 ? before : after) + ")");
      }
      est.cell_means[g][t] = stats::mean(cell);
      est.cell_counts[g][t] = cell.size();
      if (cell.size() >= 2) {
        var += stats::sample_variance(cell) / static_cast<double>(cell.size());
      } else {
        have_var = false;
      }
    }
  }
  est.estimate = est.from_cells();
  if (have_var) est.se = std::sqrt(var);
  return est;
}

DidEstimate did(const PanelDataset& panel) {
  const auto periods = panel.periods();
  if (periods.size() < 2) throw Error(ErrorKind::Cell, "DID needs at least two periods");
  return did_between(panel, periods.front(), periods.back());
}

DidEstimate did_placebo(const PanelDataset& panel) {
  std::set<std::int64_t> treated_periods;
  for (const auto& r : panel.records()) {
    if (r.a == 1) treated_periods.insert(r.period);
  }
  std::vector<std::int64_t> pre;
  for (auto p : panel.periods()) {
    if (treated_periods.empty() || p < *treated_periods.begin()) pre.push_back(p);
  }
  if (pre.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "placebo test needs at least two pre-treatment periods (found " +
                                                 std::to_string(pre.size()) + ")");
  }
  return did_between(panel, pre[pre.size() - 2], pre.back());
}

// ---------------------------------------------------------------------------
// RD

namespace {

struct SideFit {
  double intercept = 0.0;
  double slope = 0.0;
  double var_intercept = 0.0;
  std::size_t count = 0;
};

SideFit fit_side(const std::vector<double>& centered, const std::vector<double>& y,
                 const std::vector<double>& w, const char* side) {
  if (centered.size() < 2) {
    throw Error(ErrorKind::Bandwidth, std::string("fewer than two in-bandwidth points ") + side +
                                          " of the cutoff");
  }
  const auto m = static_cast<Eigen::Index>(centered.size());
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd response(m);
  Eigen::VectorXd weights(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = centered[static_cast<std::size_t>(i)];
    response(i) = y[static_cast<std::size_t>(i)];
    weights(i) = w[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd beta = solve_least_squares(design, response, 0.0, weights);
  const Eigen::VectorXd resid = response - design * beta;
  SideFit fit;
  fit.intercept = beta(0);
  fit.slope = beta(1);
  fit.var_intercept = robust_covariance(design, resid, weights)(0, 0);
  fit.count = centered.size();
  return fit;
}

}  // namespace

RdEstimate rd_local_linear(const ObservationalDataset& data, const RdSpec& spec) {
  if (!(spec.bandwidth > 0.0)) throw Error(ErrorKind::Config, "bandwidth must be > 0");
  if (spec.running_column >= data.dim()) throw Error(ErrorKind::Config, "running variable column out of range");
  std::vector<double> xl, yl, wl, xr, yr, wr;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double centered = data.x(i, spec.running_column) - spec.cutoff;
    const double dist = std::abs(centered);
    if (dist > spec.bandwidth) continue;
    const double w = spec.kernel == Kernel::Rectangular ? 1.0 : 1.0 - dist / spec.bandwidth;
    if (w <= 0.0) continue;
    if (centered < 0.0) {
      xl.push_back(centered);
      yl.push_back(data.y(i));
      wl.push_back(w);
    } else {
      xr.push_back(centered);
      yr.push_back(data.y(i));
      wr.push_back(w);
    }
  }
  const SideFit left = fit_side(xl, yl, wl, "left");
  const SideFit right = fit_side(xr, yr, wr, "right");
  RdEstimate est;
  est.intercept_left = left.intercept;
  est.intercept_right = right.intercept;
  est.slope_left = left.slope;
  est.slope_right = right.slope;
  est.n_left = left.count;
  est.n_right = right.count;
  est.jump = right.intercept - left.intercept;
  if (left.count > 2 && right.count > 2) est.se = std::sqrt(left.var_intercept + right.var_intercept);
  return est;
}

// ---------------------------------------------------------------------------
// IV

IvEstimate iv_wald(const IvDataset& iv) {
  double y1 = 0.0, y0 = 0.0, a1 = 0.0, a0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (const auto& r : iv.records()) {
    if (r.z == 1) {
      y1 += r.y;
      a1 += r.a;
      ++n1;
    } else {
      y0 += r.y;
      a0 += r.a;
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) throw Error(ErrorKind::Arm, "both instrument values must be present");
  IvEstimate est;
  est.reduced_form = y1 / static_cast<double>(n1) - y0 / static_cast<double>(n0);
  est.first_stage = a1 / static_cast<double>(n1) - a0 / static_cast<double>(n0);
  if (est.first_stage == 0.0) {
    throw Error(ErrorKind::Identification, "first stage is zero: the instrument is irrelevant to treatment");
  }
  est.late = est.reduced_form / est.first_stage;
  est.weak_flag = std::abs(est.first_stage) < kWeakFirstStage;

  // Influence-function standard error of the ratio.
  const double n = static_cast<double>(iv.size());
  const double zbar = static_cast<double>(n1) / n;
  double ybar = 0.0, abar = 0.0;
  for (const auto& r : iv.records()) {
    ybar += r.y;
    abar += r.a;
  }
  ybar /= n;
  abar /= n;
  const double alpha = ybar - est.late * abar;
  const double cov_za = est.first_stage * zbar * (1.0 - zbar);
  double meat = 0.0;
  for (const auto& r : iv.records()) {
    const double u = (r.y - alpha - est.late * r.a) * (r.z - zbar);
    meat += u * u;
  }
  est.se = std::sqrt(meat) / (n * std::abs(cov_za));
  return est;
}

IvEstimate tsls(const IvDataset& iv) {
  const auto n = static_cast<Eigen::Index>(iv.size());
  const auto d = static_cast<Eigen::Index>(iv.dim());
  if (n == 0) throw Error(ErrorKind::InsufficientData, "empty dataset");
  Eigen::MatrixXd stage1(n, 2 + d);
  Eigen::VectorXd a(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = iv.records()[static_cast<std::size_t>(i)];
    stage1(i, 0) = 1.0;
    stage1(i, 1) = r.z;
    for (Eigen::Index j = 0; j < d; ++j) stage1(i, 2 + j) = r.x[static_cast<std::size_t>(j)];
    a(i) = r.a;
    y(i) = r.y;
  }
  const Eigen::VectorXd gamma = solve_least_squares(stage1, a);
  const Eigen::VectorXd a_hat = stage1 * gamma;

  Eigen::MatrixXd stage2 = stage1;
  stage2.col(1) = a_hat;
  const Eigen::VectorXd beta = solve_least_squares(stage2, y);

  IvEstimate est;
  est.late = beta(1);
  est.first_stage = gamma(1);
  const Eigen::VectorXd reduced = solve_least_squares(stage1, y);
  est.reduced_form = reduced(1);
  est.weak_flag = std::abs(est.first_stage) < kWeakFirstStage;

  // Structural residuals use the observed treatment.
  Eigen::MatrixXd structural = stage1;
  structural.col(1) = a;
  const Eigen::VectorXd resid = y - structural * beta;
  est.se = std::sqrt(robust_covariance(stage2, resid)(1, 1));
  return est;
}

std::vector<WeakIvRow> weak_iv_study(const WeakIvStudyConfig& config, std::uint64_t seed) {
  const std::size_t reps = config.replications;
  if (reps < 2) throw Error(ErrorKind::Config, "weak-IV study needs at least two replications");
  const double z = stats::normal_critical(config.level);
  std::vector<WeakIvRow> rows;
  for (std::size_t g = 0; g < config.strengths.size(); ++g) {
    const double strength = config.strengths[g];
    if (!(strength > 0.0)) {
      throw Error(ErrorKind::Config, "first-stage strength must be positive (zero means an irrelevant instrument)");
    }
    const IvDgpConfig dgp = config.base.with_first_stage_strength(strength);
    std::vector<double> lates(reps, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> widths(reps, std::numeric_limits<double>::quiet_NaN());
    parallel_for(reps, config.threads, [&](std::size_t r) {
      const IvSimulation sim = generate_iv(dgp, seed + g * reps + r);
      try {
        const IvEstimate est = iv_wald(sim.data);
        lates[r] = est.late;
        widths[r] = 2.0 * z * est.se.value_or(std::numeric_limits<double>::quiet_NaN());
      } catch (const Error&) {
        // Sample first stage of exactly zero; counted below.
      }
    });
    WeakIvRow row;
    row.strength = strength;
    std::vector<double> ok_late, ok_width;
    for (std::size_t r = 0; r < reps; ++r) {
      if (std::isfinite(lates[r]) && std::isfinite(widths[r])) {
        ok_late.push_back(lates[r]);
        ok_width.push_back(widths[r]);
      } else {
        ++row.failures;
      }
    }
    if (ok_late.empty()) throw Error(ErrorKind::Numerical, "every replication failed at strength " + std::to_string(strength));
    row.median_late = stats::median(ok_late);
    row.median_ci_width = stats::median(ok_width);
    row.median_bias = row.median_late - dgp.true_late();
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Fixed effects

FeEstimate fe_within(const PanelDataset& panel) {
  std::map<std::int64_t, std::vector<std::size_t>> by_unit;
  const auto records = panel.records();
  for (std::size_t i = 0; i < records.size(); ++i) by_unit[records[i].unit].push_back(i);

  FeEstimate est;
  est.n_units = by_unit.size();
  est.n_obs = records.size();
  std::vector<double> ydm(records.size(), 0.0);
  std::vector<double> adm(records.size(), 0.0);
  for (const auto& [unit, idx] : by_unit) {
    double ybar = 0.0, abar = 0.0;
    for (std::size_t i : idx) {
      ybar += records[i].y;
      abar += records[i].a;
    }
    ybar /= static_cast<double>(idx.size());
    abar /= static_cast<double>(idx.size());
    bool varies = false;
    for (std::size_t i : idx) {
      ydm[i] = records[i].y - ybar;
      adm[i] = records[i].a - abar;
      if (records[i].a != records[idx.front()].a) varies = true;
    }
    if (!varies) ++est.units_without_variation;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    sxx += adm[i] * adm[i];
    sxy += adm[i] * ydm[i];
  }
  if (est.units_without_variation == est.n_units || sxx == 0.0) {
    throw Error(ErrorKind::Identification, "treatment never varies within a unit");
  }
  est.estimate = sxy / sxx;
  const double dof = static_cast<double>(est.n_obs) - static_cast<double>(est.n_units) - 1.0;
  if (dof > 0.0) {
    double sse = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const double e = ydm[i] - est.estimate * adm[i];
      sse += e * e;
    }
    est.se = std::sqrt(sse / dof / sxx);
  }
  return est;
}

}  // namespace causal
