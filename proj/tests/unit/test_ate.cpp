#include <doctest.h>

#include <cmath>
#include <map>

#include "causal/ate.hpp"
#include "causal/dgp.hpp"
#include "causal/error.hpp"
#include "causal/montecarlo.hpp"
#include "causal/rng.hpp"
#include "generators.hpp"

using namespace causal;

namespace {

NuisanceFit manual_fit(std::vector<double> pi, std::vector<double> mu0, std::vector<double> mu1) {
  NuisanceFit fit;
  fit.pi_raw = pi;
  fit.pi_hat = std::move(pi);
  fit.mu0_hat = std::move(mu0);
  fit.mu1_hat = std::move(mu1);
  return fit;
}

}  // namespace

TEST_CASE("naive difference in means") {
  const ObservationalDataset data(0, {}, {1, 1, 0, 0}, {1.0, 3.0, 0.0, 2.0});
  const auto est = naive_dim(data);
  CHECK(est.psi_hat == 1.0);
  REQUIRE(est.se.has_value());
  CHECK(*est.ci_low <= est.psi_hat);
  CHECK(est.psi_hat <= *est.ci_high);
  const ObservationalDataset same(0, {}, {1, 1, 0, 0}, {1.0, 3.0, 1.0, 3.0});
  CHECK(naive_dim(same).psi_hat == 0.0);
  try {
    naive_dim(ObservationalDataset(0, {}, {1, 1}, {1.0, 2.0}));
    FAIL("expected arm error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Arm);
  }
}

TEST_CASE("naive bias under confounding matches the potential-outcome decomposition") {
  ObsDgpConfig c;
  c.n = 50000;
  c.d = 2;
  c.confounding_strength = 1.0;
  c.tau0 = 2.0;
  const auto sim = generate_observational(c, 31);
  const auto dec = error_decomposition(sim.data, sim.truth);
  const double naive = naive_dim(sim.data).psi_hat;
  // The naive contrast equals ATE + gap exactly on the realized sample.
  CHECK(std::abs(naive - (sim.truth.true_ate + dec.total_gap)) < 1e-10);
  CHECK(std::abs(dec.total_gap - (dec.baseline_diff + dec.het_term)) < 1e-10);
  CHECK(dec.total_gap > 1.0);
}

TEST_CASE("Horvitz-Thompson hand example") {
  const ObservationalDataset data(0, {}, {1, 0}, {3.0, 1.0});
  const std::vector<double> pi{0.5, 0.5};
  CHECK(ipw(data, pi).psi_hat == doctest::Approx(2.0));
}

TEST_CASE("ipw rejects propensities outside (0, 1)") {
  const ObservationalDataset data(0, {}, {1, 0}, {3.0, 1.0});
  for (double bad : {0.0, 1.0, -0.2}) {
    try {
      ipw(data, std::vector<double>{0.5, bad});
      FAIL("expected positivity error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Positivity);
    }
  }
}

TEST_CASE("property: Hajek with arm-constant weights equals the naive contrast") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto data = gen::dataset(rng, 3 + rng.below(50), 1);
    const double p = 0.05 + 0.9 * rng.uniform();
    const std::vector<double> pi(data.size(), p);
    CHECK(std::abs(ipw(data, pi, IpwNormalization::Hajek).psi_hat - naive_dim(data).psi_hat) < 1e-12);
  }
}

TEST_CASE("g-formula with constant and equal predictions") {
  const ObservationalDataset data(0, {}, {1, 0, 1}, {3.0, 1.0, 2.0});
  CHECK(g_formula(data, std::vector<double>(3, 1.5), std::vector<double>(3, 4.0)).psi_hat == 2.5);
  const std::vector<double> mu{0.3, -1.0, 2.0};
  CHECK(g_formula(data, mu, mu).psi_hat == 0.0);
}

TEST_CASE("matching: ties go to the lowest index") {
  const ObservationalDataset data(0, {}, {1, 1, 0, 0}, {2.0, 4.0, 1.0, 1.0});
  const std::vector<double> pi(4, 0.5);
  const auto m = psm_att(data, pi);
  CHECK(m.att.psi_hat == 2.0);
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0] == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(m.pairs[1] == std::pair<std::size_t, std::size_t>{1, 3});
  const auto with_replacement = psm_att(data, pi, MatchSpec{std::nullopt, true});
  CHECK(with_replacement.pairs[1].second == 2);
}

TEST_CASE("matching: zero caliper without exact ties is empty") {
  const ObservationalDataset data(0, {}, {1, 0}, {2.0, 1.0});
  try {
    psm_att(data, std::vector<double>{0.6, 0.5}, MatchSpec{0.0, false});
    FAIL("expected empty match");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyMatch);
  }
}

TEST_CASE("matching: four-unit caliper trace") {
  const ObservationalDataset data(0, {}, {1, 1, 0, 0}, {5.0, 7.0, 1.0, 2.0});
  const auto m = psm_att(data, std::vector<double>{0.6, 0.8, 0.55, 0.9}, MatchSpec{0.1, false});
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0].second == 2);
  CHECK(m.pairs[1].second == 3);
  CHECK(m.att.psi_hat == doctest::Approx(4.5));
  CHECK(m.unmatched_treated.empty());

  const auto tight = psm_att(data, std::vector<double>{0.6, 0.8, 0.55, 0.9}, MatchSpec{0.06, false});
  CHECK(tight.pairs.size() == 1);
  CHECK(tight.unmatched_treated == std::vector<std::size_t>{1});
  CHECK(*tight.att.diagnostics.unmatched_count == 1);
}

TEST_CASE("property: aipw with zero outcome models is Horvitz-Thompson per unit") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto data = gen::dataset(rng, 2 + rng.below(40), 1);
    std::vector<double> pi(data.size());
    for (auto& p : pi) p = 0.05 + 0.9 * rng.uniform();
    const std::vector<double> zero(data.size(), 0.0);
    const auto dr = aipw(data, manual_fit(pi, zero, zero));
    const auto ht = ipw(data, pi);
    CHECK(std::abs(dr.psi_hat - ht.psi_hat) < 1e-12);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double unit = data.a(i) * data.y(i) / pi[i] - (1 - data.a(i)) * data.y(i) / (1.0 - pi[i]);
      CHECK(std::abs((*dr.eif)[i] + dr.psi_hat - unit) < 1e-12);
    }
  }
}

TEST_CASE("property: saturated nuisances make aipw equal the g-formula") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 8 + rng.below(40);
    std::vector<double> x(n);
    std::vector<int> a(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(i % 2);
      a[i] = static_cast<int>((i / 2) % 2);  // every (x, a) cell is occupied
      if (i >= 4) a[i] = rng.bernoulli(0.5) ? 1 : 0;
      y[i] = rng.normal(x[i] + 2.0 * a[i], 1.0);
    }
    const ObservationalDataset data(1, x, a, y);
    std::map<std::pair<int, int>, std::pair<double, double>> cell;  // (x, a) -> (count, sum)
    std::map<int, double> count_x;
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = cell[{static_cast<int>(x[i]), a[i]}];
      c.first += 1.0;
      c.second += y[i];
      count_x[static_cast<int>(x[i])] += 1.0;
    }
    std::vector<double> pi(n), mu0(n), mu1(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int xi = static_cast<int>(x[i]);
      pi[i] = cell[{xi, 1}].first / count_x[xi];
      mu0[i] = cell[{xi, 0}].second / cell[{xi, 0}].first;
      mu1[i] = cell[{xi, 1}].second / cell[{xi, 1}].first;
    }
    NuisanceFit fit = manual_fit(pi, mu0, mu1);
    fit.clip = ClipBounds{1e-9, 1.0 - 1e-9};
    const auto dr = aipw(data, fit);
    CHECK(std::abs(dr.psi_hat - g_formula(data, mu0, mu1).psi_hat) < 1e-10);
  }
}

TEST_CASE("aipw stores a centered influence vector") {
  ObsDgpConfig c;
  c.n = 1000;
  c.d = 2;
  c.confounding_strength = 0.5;
  c.tau0 = 1.0;
  const auto sim = generate_observational(c, 12);
  const auto fit = cross_fit(sim.data, 5, {}, {}, 4);
  const auto est = aipw(sim.data, fit);
  double sum = 0.0;
  for (double v : *est.eif) sum += v;
  CHECK(std::abs(sum / c.n) < 1e-10);
  REQUIRE(est.diagnostics.fold_means.size() == 5);
  CHECK(std::abs(*est.diagnostics.fold_mean_average - est.psi_hat) < 1e-10);  // equal folds
  const auto closed = eif_closed_form(sim.data, fit, est.psi_hat);
  for (std::size_t i = 0; i < c.n; ++i) CHECK(std::abs(closed[i] - (*est.eif)[i]) < 1e-12);
  CHECK(*est.ci_low <= est.psi_hat);
  CHECK(est.psi_hat <= *est.ci_high);
}

TEST_CASE("aipw refuses propensities outside the clip bounds") {
  const ObservationalDataset data(0, {}, {1, 0}, {3.0, 1.0});
  CHECK_THROWS_AS(aipw(data, manual_fit({0.001, 0.5}, {0.0, 0.0}, {0.0, 0.0})), std::logic_error);
}

TEST_CASE("closed-form EIF hand values") {
  const ObservationalDataset data(0, {}, {1, 0, 1}, {2.0, 1.0, 3.0});
  const auto fit = manual_fit({0.5, 0.5, 0.5}, {1.0, 1.0, 1.0}, {2.0, 2.0, 2.0});
  const auto phi = eif_closed_form(data, fit, 1.0);
  CHECK(phi[0] == doctest::Approx(0.0));  // a=1, y = mu1: mu1 - mu0 - psi
  CHECK(phi[1] == doctest::Approx(0.0));  // a=0, y = mu0
  CHECK(phi[2] == doctest::Approx(2.0));  // (3 - 2)/0.5 + (2 - 1) - 1
}

TEST_CASE("variance_ci") {
  const auto constant = variance_ci(std::vector<double>{0.0, 0.0, 0.0}, 1.5);
  CHECK(constant.se == 0.0);
  CHECK(constant.ci_low == 1.5);
  CHECK(constant.ci_high == 1.5);
  const auto two = variance_ci(std::vector<double>{-1.0, 1.0}, 0.0);
  CHECK(two.se == doctest::Approx(1.0));
  CHECK(std::abs(two.ci_high - 1.959963984540054) < 1e-9);
  try {
    variance_ci(std::vector<double>{1.0}, 0.0);
    FAIL("expected insufficient data");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
}

TEST_CASE("property: location shift leaves shift-invariant estimators unchanged") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    ObsDgpConfig c;
    c.n = 300;
    c.d = 2;
    c.confounding_strength = 0.5;
    c.tau0 = 1.0;
    const auto sim = generate_observational(c, rng.next_u64());
    const double shift = 100.0 * rng.normal();
    std::vector<double> y(sim.data.outcome().begin(), sim.data.outcome().end());
    for (auto& v : y) v += shift;
    const auto shifted = sim.data.with_outcome(y);
    const auto seed = rng.next_u64();
    LearnerConfig learners;
    learners.outcome_features = FeatureMap::LinearPlusQuadratic;
    const auto f0 = cross_fit(sim.data, 5, learners, {}, seed);
    const auto f1 = cross_fit(shifted, 5, learners, {}, seed);
    for (std::size_t i = 0; i < c.n; ++i) CHECK(std::abs(f1.mu0_hat[i] - f0.mu0_hat[i] - shift) < 1e-8);
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
    CHECK(close(naive_dim(sim.data).psi_hat, naive_dim(shifted).psi_hat));
    CHECK(close(ipw(sim.data, f0.pi_hat, IpwNormalization::Hajek).psi_hat,
                ipw(shifted, f1.pi_hat, IpwNormalization::Hajek).psi_hat));
    CHECK(close(g_formula(sim.data, f0.mu0_hat, f0.mu1_hat).psi_hat,
                g_formula(shifted, f1.mu0_hat, f1.mu1_hat).psi_hat));
    CHECK(close(aipw(sim.data, f0).psi_hat, aipw(shifted, f1).psi_hat));
    CHECK(close(psm_att(sim.data, f0.pi_hat).att.psi_hat, psm_att(shifted, f1.pi_hat).att.psi_hat));
  }
}
