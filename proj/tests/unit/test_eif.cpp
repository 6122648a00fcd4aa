#include <doctest.h>

#include <cmath>

#include "causal/eif.hpp"
#include "causal/error.hpp"
#include "causal/rng.hpp"
#include "generators.hpp"

using namespace causal;
using namespace causal::eif;

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

}  // namespace

TEST_CASE("DiscreteMeasure validation") {
  CHECK(kind_of([] { DiscreteMeasure({"y"}, {{0.0}, {1.0}}, {0.5, 0.6}); }) == ErrorKind::Validation);
  CHECK(kind_of([] { DiscreteMeasure({"y"}, {{0.0}, {0.0}}, {0.5, 0.5}); }) == ErrorKind::Validation);
  CHECK(kind_of([] { DiscreteMeasure({"y"}, {{0.0}, {1.0}}, {-0.5, 1.5}); }) == ErrorKind::Validation);
  CHECK(kind_of([] { DiscreteMeasure({"y"}, {{0.0, 1.0}}, {1.0}); }) == ErrorKind::Validation);
  const std::vector<Point> sample{{1.0}, {2.0}, {1.0}};
  const auto e = DiscreteMeasure::empirical({"y"}, sample);
  REQUIRE(e.size() == 2);
  CHECK(e.probs()[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("mix") {
  const DiscreteMeasure p({"y"}, {{0.0}, {1.0}}, {0.5, 0.5});
  const DiscreteMeasure g({"y"}, {{1.0}}, {1.0});
  CHECK(mix(p, g, 0.0).probs() == p.probs());
  const auto m = mix(p, g, 0.5);
  CHECK(m.probs()[0] == doctest::Approx(0.25));
  CHECK(m.probs()[1] == doctest::Approx(0.75));
  const auto all_g = mix(p, g, 1.0);
  CHECK(all_g.probs()[0] == 0.0);
  CHECK(all_g.probs()[1] == 1.0);
  const DiscreteMeasure h({"y"}, {{5.0}}, {1.0});
  const auto u = mix(p, h, 0.2);
  REQUIRE(u.size() == 3);
  CHECK(u.points()[2] == Point{5.0});
  CHECK(u.probs()[2] == doctest::Approx(0.2));
}

TEST_CASE("score_of_path") {
  const DiscreteMeasure p({"y"}, {{0.0}, {1.0}}, {0.5, 0.5});
  for (double s : score_of_path(p, p)) CHECK(s == 0.0);
  const DiscreteMeasure pt({"y"}, {{0.0}, {1.0}}, {0.25, 0.75});
  const auto s = score_of_path(p, pt);
  CHECK(s[0] == doctest::Approx(-0.5));
  CHECK(s[1] == doctest::Approx(0.5));
  const DiscreteMeasure outside({"y"}, {{0.0}, {2.0}}, {0.5, 0.5});
  CHECK(kind_of([&] { score_of_path(p, outside); }) == ErrorKind::Support);
}

TEST_CASE("property: path scores are mean zero") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = gen::causal_measure(rng, 2, 0.01);
    const auto q = DiscreteMeasure(p.coords(), p.points(), gen::simplex(rng, p.size(), 0.0));
    CHECK(std::abs(p.expect(score_of_path(p, q))) < 1e-12);
  }
}

TEST_CASE("Gateaux derivative of the mean") {
  const DiscreteMeasure p({"y"}, {{0.0}, {1.0}}, {0.5, 0.5});
  const DiscreteMeasure u({"y"}, {{0.0}, {1.0}, {2.0}}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(std::abs(gateaux_if(Functional::mean("y"), u, {2.0}).value - 1.0) < 1e-10);
  // A point outside the support is added at zero mass.
  CHECK(std::abs(gateaux_if(Functional::mean("y"), p, {4.0}).value - 3.5) < 1e-10);
}

TEST_CASE("property: conditional mean matches its closed form") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = gen::causal_measure(rng, 2, 0.05);
    const auto f = Functional::cond_mean("y", {{"a", 0.0}});
    for (const auto& z : p.points()) {
      CHECK(std::abs(gateaux_if(f, p, z).value - f.closed_form_influence(p, z)) < 1e-6);
    }
    const auto f2 = Functional::cond_mean("y", {{"a", 1.0}, {"x", 0.0}});
    for (const auto& z : p.points()) {
      CHECK(std::abs(gateaux_if(f2, p, z).value - f2.closed_form_influence(p, z)) < 1e-6);
    }
  }
}

TEST_CASE("property: ATE and counterfactual means match closed forms, mean zero") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = gen::causal_measure(rng, 2, 0.05);
    for (const auto& f : {Functional::ate(), Functional::counterfactual_mean(1), Functional::counterfactual_mean(0),
                          Functional::mean("y")}) {
      const auto phi = gateaux_if_all(f, p);
      for (std::size_t j = 0; j < p.size(); ++j) {
        CHECK(std::abs(phi[j] - f.closed_form_influence(p, p.points()[j])) < 1e-6);
      }
      CHECK(std::abs(p.expect(phi)) < 1e-8);
    }
  }
}

TEST_CASE("Evaluability and epsilon errors") {
  const DiscreteMeasure p({"a", "y"}, {{0.0, 1.0}, {1.0, 2.0}}, {1.0, 0.0});
  const auto f = Functional::cond_mean("y", {{"a", 1.0}});
  CHECK(kind_of([&] { f(p); }) == ErrorKind::Evaluability);
  const DiscreteMeasure q({"y"}, {{0.0}, {1.0}}, {0.5, 0.5});
  const std::vector<double> big{-2000.0, 2000.0};
  CHECK(kind_of([&] { pathwise_derivative(Functional::mean("y"), q, big); }) == ErrorKind::Epsilon);
}

TEST_CASE("pathwise derivative") {
  Rng rng(6);
  const auto p = gen::causal_measure(rng, 2, 0.05);
  const std::vector<double> zero(p.size(), 0.0);
  CHECK(std::abs(pathwise_derivative(Functional::ate(), p, zero).value) < 1e-14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = gen::score(rng, p);
    double expected = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) expected += p.probs()[j] * s[j] * p.points()[j][2];
    CHECK(std::abs(pathwise_derivative(Functional::mean("y"), p, s).value - expected) < 1e-8);
  }
}

TEST_CASE("property: central identity") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = gen::causal_measure(rng, 2, 0.05);
    const auto s = gen::score(rng, p);
    CHECK(central_identity_check(Functional::mean("y"), p, s).gap < 1e-8);
    CHECK(central_identity_check(Functional::ate(), p, s).gap < 1e-5);
    CHECK(central_identity_check(Functional::cond_mean("y", {{"x", 1.0}}), p, s).gap < 1e-5);
  }
}

TEST_CASE("property: score factorization is additive") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = gen::causal_measure(rng, 2, 0.05);
    const auto s = gen::score(rng, p);
    const auto parts = factorize_causal_score(p, s);
    for (std::size_t j = 0; j < p.size(); ++j) {
      CHECK(std::abs(parts.x[j] + parts.a_given_x[j] + parts.y_given_ax[j] - s[j]) < 1e-12);
    }
    CHECK(std::abs(p.expect(parts.x)) < 1e-12);
    CHECK(std::abs(p.expect(parts.a_given_x)) < 1e-12);
    CHECK(std::abs(p.expect(parts.y_given_ax)) < 1e-12);
    const auto f = Functional::ate();
    const double whole = pathwise_derivative(f, p, s).value;
    const double sum = pathwise_derivative(f, p, parts.x).value + pathwise_derivative(f, p, parts.a_given_x).value +
                       pathwise_derivative(f, p, parts.y_given_ax).value;
    CHECK(std::abs(whole - sum) < 1e-6);
    // The ATE does not depend on the treatment mechanism.
    CHECK(std::abs(pathwise_derivative(f, p, parts.a_given_x).value) < 1e-6);

    const auto split = split_score(p, s, {"x"});
    CHECK(std::abs(pathwise_derivative(f, p, split.marginal).value +
                   pathwise_derivative(f, p, split.conditional).value - whole) < 1e-6);
  }
}

TEST_CASE("one-step estimator") {
  Rng rng(9);
  const auto p = gen::causal_measure(rng, 2, 0.05);
  std::vector<Point> sample;
  for (int i = 0; i < 50; ++i) sample.push_back(p.points()[rng.below(p.size())]);
  const auto emp = DiscreteMeasure::empirical(p.coords(), sample);
  double ybar = 0.0;
  for (const auto& z : sample) ybar += z[2];
  ybar /= sample.size();
  const auto mean_step = one_step(Functional::mean("y"), p, emp);
  CHECK(std::abs(mean_step.estimate - ybar) < 1e-9);
  CHECK(std::abs(one_step(Functional::mean("y"), p, emp, InfluenceMethod::ClosedForm).estimate - ybar) < 1e-12);

  // Sampling from P_est itself: the correction vanishes as n grows.
  const auto self = one_step(Functional::ate(), p, p);
  CHECK(std::abs(self.correction) < 1e-8);
}

TEST_CASE("one-step repairs a distorted plug-in") {
  gen::CellSpec truth;
  truth.px1 = 0.5;
  truth.pi[0] = 0.3;
  truth.pi[1] = 0.7;
  truth.y_lo[1][1] = 4.0;
  truth.y_hi[1][1] = 6.0;
  gen::CellSpec distorted = truth;
  distorted.px1 = 0.2;
  distorted.pi[0] = 0.6;
  distorted.pi[1] = 0.4;
  const auto p = gen::cell_measure(truth);
  const auto p_est = gen::cell_measure(distorted);
  Rng rng(10);
  std::vector<Point> sample;
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    std::size_t j = 0;
    while (j + 1 < p.size() && u >= p.probs()[j]) u -= p.probs()[j++];
    sample.push_back(p.points()[j]);
  }
  const auto emp = DiscreteMeasure::empirical(p.coords(), sample);
  const auto f = Functional::ate();
  const auto os = one_step(f, p_est, emp);
  const double truth_value = f(p);
  CHECK(std::abs(truth_value - gen::cell_ate(truth)) < 1e-12);
  CHECK(std::abs(os.estimate - truth_value) < std::abs(os.plug_in - truth_value));
  CHECK(std::abs(os.estimate - truth_value) < 0.1);
}

TEST_CASE("second-order remainder vanishes when either nuisance is exact") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const gen::CellSpec truth = gen::random_cells(rng, 0.02);
    const auto p = gen::cell_measure(truth);

    gen::CellSpec mu_wrong = truth;  // exact propensities, wrong outcome means
    const gen::CellSpec other = gen::random_cells(rng, 0.02);
    for (int x = 0; x < 2; ++x)
      for (int a = 0; a < 2; ++a) mu_wrong.q[x][a] = other.q[x][a];
    mu_wrong.px1 = other.px1;
    const auto r_mu = second_order_remainder(p, gen::cell_measure(mu_wrong));
    CHECK(std::abs(r_mu.r2) < 1e-12);

    gen::CellSpec pi_wrong = truth;  // exact outcome means, wrong propensities
    pi_wrong.pi[0] = other.pi[0];
    pi_wrong.pi[1] = other.pi[1];
    pi_wrong.px1 = other.px1;
    const auto r_pi = second_order_remainder(p, gen::cell_measure(pi_wrong));
    CHECK(std::abs(r_pi.r2) < 1e-12);
  }
}

TEST_CASE("second-order remainder with both nuisances wrong") {
  gen::CellSpec truth;
  gen::CellSpec est = truth;
  est.pi[0] = 0.3;
  est.pi[1] = 0.6;
  est.q[0][1] = 0.8;
  est.q[1][0] = 0.2;
  const auto p = gen::cell_measure(truth);
  const auto q = gen::cell_measure(est);
  const auto r = second_order_remainder(p, q);
  CHECK(std::abs(r.r2) > 1e-3);
  CHECK(r.within_bound);
  CHECK(std::abs(r.r2) <= r.bound);
  // The remainder is exactly the plug-in error after the first-order correction.
  CHECK(std::abs(r.r2 - plug_in_remainder(Functional::ate(), p, q)) < 1e-12);
}

TEST_CASE("the unweighted product is not a bound when pi_hat is small") {
  gen::CellSpec truth;
  truth.pi[0] = truth.pi[1] = 0.5;
  gen::CellSpec est = truth;
  est.pi[0] = est.pi[1] = 0.1;
  for (int x = 0; x < 2; ++x) est.q[x][1] = 0.0;  // mu_hat_1 below mu_1 in every cell
  const auto r = second_order_remainder(gen::cell_measure(truth), gen::cell_measure(est));
  CHECK(std::abs(r.arm1.r2) > r.arm1.unweighted_product);
  CHECK(std::abs(r.arm1.r2) <= r.arm1.bound + 1e-12);
}

TEST_CASE("property: remainder identity and bound over random pairs") {
  Rng rng(12);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = gen::causal_measure(rng, 2, 0.02);
    const auto q = DiscreteMeasure(p.coords(), p.points(), gen::simplex(rng, p.size(), 0.02));
    const auto r = second_order_remainder(p, q);
    if (!r.within_bound) ++violations;
    CHECK(std::abs(r.r2 - plug_in_remainder(Functional::ate(), p, q)) < 1e-10);
  }
  CHECK(violations == 0);
}

TEST_CASE("remainder positivity error") {
  const DiscreteMeasure p({"x", "a", "y"}, {{0, 0, 1}, {0, 1, 2}}, {0.5, 0.5});
  const DiscreteMeasure q({"x", "a", "y"}, {{0, 0, 1}, {0, 1, 2}}, {1.0, 0.0});
  CHECK(kind_of([&] { second_order_remainder(p, q); }) == ErrorKind::Positivity);
}
