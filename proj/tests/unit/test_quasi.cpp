#include <doctest.h>

#include <cmath>

#include "causal/ate.hpp"
#include "causal/dgp.hpp"
#include "causal/error.hpp"
#include "causal/quasi.hpp"
#include "causal/regression.hpp"
#include "causal/rng.hpp"

using namespace causal;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected causal::Error");
  return ErrorKind::Io;
}

/// Two units per group, two periods, cell means as given.
PanelDataset two_by_two(double m00, double m01, double m10, double m11) {
  std::vector<PanelRecord> r;
  std::int64_t unit = 0;
  for (int g = 0; g < 2; ++g) {
    for (int k = 0; k < 2; ++k, ++unit) {
      const double jitter = k == 0 ? -0.5 : 0.5;
      r.push_back({unit, 0, 0, (g ? m10 : m00) + jitter, g});
      r.push_back({unit, 1, g, (g ? m11 : m01) + jitter, g});
    }
  }
  return PanelDataset(std::move(r));
}

PanelDataset scaled(const PanelDataset& p, double c) {
  std::vector<double> y;
  for (const auto& r : p.records()) y.push_back(c * r.y);
  return p.with_outcome(y);
}

}  // namespace

TEST_CASE("DID hand cells") {
  const auto est = did(two_by_two(1, 2, 3, 6));
  CHECK(est.estimate == doctest::Approx(2.0));
  CHECK(est.from_cells() == est.estimate);
  CHECK(est.cell_means[1][1] == doctest::Approx(6.0));
  CHECK(did(two_by_two(1, 2, 1, 2)).estimate == doctest::Approx(0.0));
}

TEST_CASE("DID on noiseless panels") {
  PanelDgpConfig c;
  c.n_units = 20;
  c.n_periods = 2;
  c.group_effect = 3.0;
  c.time_trend = 0.7;
  c.treatment_effect = 1.5;
  c.unit_effect_sd = 2.0;
  c.noise_sd = 0.0;
  CHECK(std::abs(did(generate_panel(c, 1).data).estimate - 1.5) < 1e-12);
  c.treatment_effect = 0.0;
  CHECK(std::abs(did(generate_panel(c, 1).data).estimate) < 1e-12);
  c.treatment_effect = 1.5;
  c.parallel_violation = 0.4;
  CHECK(std::abs(did(generate_panel(c, 1).data).estimate - 1.9) < 1e-12);
}

TEST_CASE("DID placebo") {
  PanelDgpConfig c;
  c.n_units = 20;
  c.n_periods = 4;
  c.treatment_effect = 2.0;
  c.time_trend = 0.3;
  c.noise_sd = 0.0;
  c.unit_effect_sd = 1.0;
  const auto parallel = did_placebo(generate_panel(c, 2).data);
  CHECK(std::abs(parallel.estimate) < 1e-12);
  CHECK(parallel.period_before == 1);
  CHECK(parallel.period_after == 2);
  c.parallel_violation = 0.25;
  CHECK(std::abs(did_placebo(generate_panel(c, 2).data).estimate - 0.25) < 1e-12);

  c.parallel_violation = 0.0;
  c.noise_sd = 1.0;
  c.n_units = 4000;
  const auto noisy = did_placebo(generate_panel(c, 3).data);
  REQUIRE(noisy.se.has_value());
  CHECK(std::abs(noisy.estimate) < 3.0 * *noisy.se);

  c.n_periods = 2;
  CHECK(kind_of([&] { did_placebo(generate_panel(c, 2).data); }) == ErrorKind::InsufficientData);
}

TEST_CASE("DID empty cell") {
  const PanelDataset p({{0, 0, 0, 1.0, 0}, {0, 1, 0, 1.0, 0}, {1, 1, 1, 2.0, 1}});
  CHECK(kind_of([&] { did(p); }) == ErrorKind::Cell);
}

TEST_CASE("RD recovers the jump on noiseless data") {
  RdDgpConfig c;
  c.n = 500;
  c.jump = 1.7;
  c.slope_left = 0.8;
  c.slope_right = -0.4;
  c.noise_sd = 0.0;
  const auto sim = generate_rd(c, 4);
  for (double h : {0.2, 0.5, 1.0}) {
    for (Kernel k : {Kernel::Rectangular, Kernel::Triangular}) {
      CHECK(std::abs(rd_local_linear(sim.data, RdSpec{0.0, h, k, 0}).jump - 1.7) < 1e-10);
    }
  }
  c.jump = 0.0;
  CHECK(std::abs(rd_local_linear(generate_rd(c, 4).data, RdSpec{0.0, 0.5}).jump) < 1e-10);
}

TEST_CASE("RD rectangular equals windowed OLS") {
  RdDgpConfig c;
  c.n = 400;
  c.cutoff = 0.3;
  c.jump = 1.0;
  c.slope_left = 1.0;
  c.slope_right = 2.0;
  const auto sim = generate_rd(c, 6);
  const double h = 0.6;
  std::vector<double> rl, yl, rr, yr;
  for (std::size_t i = 0; i < sim.data.size(); ++i) {
    const double d = sim.data.x(i, 0) - c.cutoff;
    if (std::abs(d) > h) continue;
    (d < 0 ? rl : rr).push_back(d);
    (d < 0 ? yl : yr).push_back(sim.data.y(i));
  }
  const auto ols = [](const std::vector<double>& r, const std::vector<double>& y) {
    return fit_linear(Eigen::Map<const Eigen::VectorXd>(r.data(), r.size()),
                      Eigen::Map<const Eigen::VectorXd>(y.data(), y.size()))
        .coefficients(0);
  };
  const double expected = ols(rr, yr) - ols(rl, yl);
  CHECK(std::abs(rd_local_linear(sim.data, RdSpec{c.cutoff, h}).jump - expected) < 1e-10);
}

TEST_CASE("RD mirrored data without a jump") {
  std::vector<double> r, y;
  std::vector<int> a;
  for (double v : {0.1, 0.3, 0.5, 0.8}) {
    for (double s : {-1.0, 1.0}) {
      r.push_back(s * v);
      y.push_back(2.0 + v * v);
      a.push_back(s > 0 ? 1 : 0);
    }
  }
  const ObservationalDataset data(1, r, a, y);
  CHECK(std::abs(rd_local_linear(data, RdSpec{0.0, 1.0}).jump) < 1e-12);
  CHECK(kind_of([&] { rd_local_linear(data, RdSpec{0.0, 0.2}); }) == ErrorKind::Bandwidth);
}

TEST_CASE("Wald hand cells") {
  std::vector<IvRecord> r;
  for (int i = 0; i < 10; ++i) r.push_back({1, i < 8 ? 1 : 0, i < 5 ? 2.0 : 4.0, {}});
  for (int i = 0; i < 10; ++i) r.push_back({0, i < 3 ? 1 : 0, i < 5 ? 0.0 : 2.0, {}});
  const auto est = iv_wald(IvDataset(r));
  CHECK(est.first_stage == doctest::Approx(0.5));
  CHECK(est.reduced_form == doctest::Approx(2.0));
  CHECK(est.late == doctest::Approx(4.0));
  CHECK(est.late == est.reduced_form / est.first_stage);
  CHECK_FALSE(est.weak_flag);
}

TEST_CASE("perfect compliance reduces Wald to the naive contrast") {
  IvDgpConfig c;
  c.n = 300;
  c.baseline_by_type = {0.0, 0.5, 0.0, 0.0};
  const auto sim = generate_iv(c, 3);
  std::vector<int> a;
  std::vector<double> y;
  for (const auto& r : sim.data.records()) {
    a.push_back(r.a);
    y.push_back(r.y);
  }
  const ObservationalDataset obs(0, {}, a, y);
  CHECK(std::abs(iv_wald(sim.data).late - naive_dim(obs).psi_hat) < 1e-12);
}

TEST_CASE("property: 2SLS equals Wald without covariates") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    IvDgpConfig c;
    c.n = 50 + rng.below(500);
    c.p_always = 0.2;
    c.p_never = 0.2;
    c.p_complier = 0.6;
    c.baseline_by_type = {1.0, 0.0, -1.0, 0.0};
    c.effect_by_type = {2.0, rng.normal(), 0.0, 0.0};
    const auto sim = generate_iv(c, rng.next_u64());
    CHECK(std::abs(tsls(sim.data).late - iv_wald(sim.data).late) < 1e-10);
  }
}

TEST_CASE("2SLS with the instrument as a covariate is rank deficient") {
  IvDgpConfig c;
  c.n = 200;
  const auto sim = generate_iv(c, 3);
  std::vector<std::vector<double>> x;
  for (const auto& r : sim.data.records()) x.push_back({static_cast<double>(r.z)});
  CHECK(kind_of([&] { tsls(sim.data.with_covariates(x, {"z_copy"})); }) == ErrorKind::Rank);
}

TEST_CASE("2SLS with covariates on a strong instrument") {
  IvDgpConfig c;
  c.n = 20000;
  c.p_always = 0.15;
  c.p_never = 0.15;
  c.p_complier = 0.7;
  c.effect_by_type = {0.0, 1.25, 0.0, 0.0};
  c.baseline_by_type = {1.0, 0.0, -1.0, 0.0};
  c.d = 2;
  c.covariate_effect = 0.8;
  const auto sim = generate_iv(c, 41);
  const auto est = tsls(sim.data);
  REQUIRE(est.se.has_value());
  CHECK(std::abs(est.late - sim.true_late) < 3.0 * *est.se);
}

TEST_CASE("FE within: hand panel, identification, unit effects") {
  const PanelDataset p({{0, 0, 0, 0.0, 0}, {0, 1, 1, 2.0, 0}, {1, 0, 0, 1.0, 0}, {1, 1, 1, 3.0, 0}});
  CHECK(fe_within(p).estimate == doctest::Approx(2.0));
  const PanelDataset flat({{0, 0, 0, 0.0, 0}, {0, 1, 0, 2.0, 0}, {1, 0, 1, 1.0, 1}, {1, 1, 1, 3.0, 1}});
  CHECK(kind_of([&] { fe_within(flat); }) == ErrorKind::Identification);

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PanelRecord> r;
    for (std::int64_t u = 0; u < 8; ++u) {
      for (std::int64_t t = 0; t < 3; ++t) {
        r.push_back({u, t, rng.bernoulli(0.5) ? 1 : 0, rng.normal(), 0});
      }
    }
    r[0].a = 0;
    r[1].a = 1;
    const PanelDataset base(r);
    for (auto& rec : r) rec.y += 1000.0 * static_cast<double>(rec.unit * rec.unit) - 37.0;
    CHECK(std::abs(fe_within(PanelDataset(r)).estimate - fe_within(base).estimate) < 1e-9);
  }
}

TEST_CASE("property: FE within equals dummy-variable OLS") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PanelRecord> r;
    for (std::int64_t u = 0; u < 6; ++u) {
      const std::int64_t periods = 2 + static_cast<std::int64_t>(rng.below(3));
      for (std::int64_t t = 0; t < periods; ++t) {
        r.push_back({u, t, rng.bernoulli(0.5) ? 1 : 0, rng.normal(0.5 * u, 1.0), 0});
      }
    }
    r[0].a = 0;
    r[1].a = 1;
    const PanelDataset panel(r);
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(r.size(), 7);
    Eigen::VectorXd y(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      design(i, 0) = r[i].a;
      design(i, 1 + r[i].unit) = 1.0;
      y(i) = r[i].y;
    }
    const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
    CHECK(std::abs(fe_within(panel).estimate - beta(0)) < 1e-8);
  }
}

TEST_CASE("property: quasi-experimental estimates scale with the outcome") {
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(b)); };
  const double c = 10.0;

  PanelDgpConfig pc;
  pc.n_units = 40;
  pc.n_periods = 3;
  pc.treatment_effect = 1.0;
  pc.unit_effect_sd = 1.0;
  const auto panel = generate_panel(pc, 8).data;
  CHECK(rel(did(scaled(panel, c)).estimate, c * did(panel).estimate) < 1e-9);
  CHECK(rel(fe_within(scaled(panel, c)).estimate, c * fe_within(panel).estimate) < 1e-9);

  RdDgpConfig rc;
  rc.n = 300;
  rc.jump = 1.0;
  const auto rd = generate_rd(rc, 8).data;
  std::vector<double> y(rd.outcome().begin(), rd.outcome().end());
  for (auto& v : y) v *= c;
  for (Kernel k : {Kernel::Rectangular, Kernel::Triangular}) {
    const RdSpec spec{0.0, 0.5, k};
    CHECK(rel(rd_local_linear(rd.with_outcome(y), spec).jump, c * rd_local_linear(rd, spec).jump) < 1e-9);
  }

  IvDgpConfig ic;
  ic.n = 500;
  ic.p_always = 0.2;
  ic.p_never = 0.2;
  ic.p_complier = 0.6;
  ic.d = 1;
  ic.covariate_effect = 1.0;
  ic.effect_by_type = {0.0, 1.0, 0.0, 0.0};
  const auto iv = generate_iv(ic, 8).data;
  std::vector<double> yi;
  for (const auto& r : iv.records()) yi.push_back(c * r.y);
  CHECK(rel(iv_wald(iv.with_outcome(yi)).late, c * iv_wald(iv).late) < 1e-9);
  CHECK(rel(tsls(iv.with_outcome(yi)).late, c * tsls(iv).late) < 1e-9);
}

TEST_CASE("weak IV study is deterministic and rejects zero strength") {
  WeakIvStudyConfig c;
  c.base.n = 200;
  c.base.p_always = 0.25;
  c.base.p_never = 0.25;
  c.base.p_complier = 0.5;
  c.strengths = {0.2, 0.6};
  c.replications = 20;
  const auto a = weak_iv_study(c, 5);
  const auto b = weak_iv_study(c, 5);
  REQUIRE(a.size() == 2);
  for (std::size_t g = 0; g < 2; ++g) {
    CHECK(a[g].median_late == b[g].median_late);
    CHECK(a[g].median_ci_width == b[g].median_ci_width);
  }
  CHECK(a[0].median_ci_width > a[1].median_ci_width);
  c.strengths = {0.0, 0.5};
  CHECK(kind_of([&] { weak_iv_study(c, 5); }) == ErrorKind::Config);
}
