#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace causal::eif {

using Point = std::vector<double>;

/// Finite support over named coordinates with probability weights.
///
/// Invariants: probs >= 0, sum(probs) = 1 within 1e-12, points distinct under
/// exact coordinate equality. Zero-probability points are allowed so that
/// supports can be unioned.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<std::string> coords, std::vector<Point> points, std::vector<double> probs);

  /// Empirical measure of a sample: duplicates merged, first-occurrence order.
  static DiscreteMeasure empirical(std::vector<std::string> coords, std::span<const Point> sample);

  const std::vector<std::string>& coords() const noexcept { return coords_; }
  const std::vector<Point>& points() const noexcept { return points_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return points_.size(); }

  /// Index of a coordinate name; Support error if absent.
  std::size_t coord(const std::string& name) const;
  std::optional<std::size_t> find(const Point& z) const;

  /// Copy with `z` appended at zero mass if it is not already in the support.
  DiscreteMeasure with_point(const Point& z) const;

  /// Support-wise expectation of per-point values.
  double expect(std::span<const double> values) const;

 private:
  std::vector<std::string> coords_;
  std::vector<Point> points_;
  std::vector<double> probs_;
};

struct Condition {
  std::string coord;
  double value = 0.0;
};

/// A statistical functional psi(P) over discrete measures.
///
/// Counterfactual means and the ATE treat every coordinate other than the
/// treatment and outcome as a covariate:
///   psi_a = sum_x p(x) E[Y | A=a, X=x],   ATE = psi_1 - psi_0.
class Functional {
 public:
  enum class Kind { Mean, CondMean, CounterfactualMean, Ate };

  static Functional mean(std::string coord);
  static Functional cond_mean(std::string coord, std::vector<Condition> conditions);
  static Functional counterfactual_mean(int arm, std::string treatment = "a", std::string outcome = "y");
  static Functional ate(std::string treatment = "a", std::string outcome = "y");

  Kind kind() const noexcept { return kind_; }
  std::string label() const;

  /// Evaluates on arbitrary (possibly signed) weights over `measure`'s support.
  /// Weights are normalized by their sum. Evaluability error if a conditioning
  /// mass needed by the functional is zero.
  double evaluate(const DiscreteMeasure& measure, std::span<const double> weights) const;
  double operator()(const DiscreteMeasure& measure) const { return evaluate(measure, measure.probs()); }

  /// Analytic influence function at z:
  ///   mean:        z_c - E[c]
  ///   cond_mean:   1{z in C} / P(C) * (z_c - E[c | C])
  ///   cf mean a:   1{a_z = a} / pi_a(x_z) * (y_z - mu_a(x_z)) + mu_a(x_z) - psi_a
  ///   ate:         cf mean 1 minus cf mean 0
  double closed_form_influence(const DiscreteMeasure& measure, const Point& z) const;

 private:
  Kind kind_ = Kind::Mean;
  std::string coord_;
  std::vector<Condition> conditions_;
  int arm_ = 1;
  std::string treatment_ = "a";
  std::string outcome_ = "y";
};

/// Step sizes for central differences, combined by Richardson extrapolation in h^2.
struct EpsSchedule {
  std::vector<double> steps{1e-3, 5e-4, 2.5e-4};
};

struct Derivative {
  double value = 0.0;
  double error_estimate = 0.0;  // disagreement between the last two extrapolation levels
};

/// (1 - eps) P + eps G on the union support (P's points first).
DiscreteMeasure mix(const DiscreteMeasure& p, const DiscreteMeasure& g, double eps);

/// s_j = ptilde_j / p_j - 1 over P's support. Support error unless P dominates Ptilde.
std::vector<double> score_of_path(const DiscreteMeasure& p, const DiscreteMeasure& ptilde);

/// d/d eps f((1 - eps) P + eps delta_z) at eps = 0.
Derivative gateaux_if(const Functional& f, const DiscreteMeasure& p, const Point& z,
                      const EpsSchedule& schedule = {});

/// Numerical influence values at every support point (zero-mass points included).
std::vector<double> gateaux_if_all(const Functional& f, const DiscreteMeasure& p,
                                   const EpsSchedule& schedule = {});

/// d/d eps f(measure with probs (1 + eps s) p) at eps = 0.
/// Epsilon error if 1 +/- eps s_j < 0 for some step.
Derivative pathwise_derivative(const Functional& f, const DiscreteMeasure& p, std::span<const double> score,
                               const EpsSchedule& schedule = {});

struct CentralIdentity {
  double lhs = 0.0;  // pathwise derivative
  double rhs = 0.0;  // sum_j p_j phi(z_j) s_j
  double gap = 0.0;
};

CentralIdentity central_identity_check(const Functional& f, const DiscreteMeasure& p,
                                       std::span<const double> score, const EpsSchedule& schedule = {});

/// E[values | coords] evaluated at every support point.
std::vector<double> conditional_expectation(const DiscreteMeasure& p, std::span<const double> values,
                                            const std::vector<std::string>& coords);

struct ScoreSplit {
  std::vector<double> marginal;     // E[s | coords]
  std::vector<double> conditional;  // s - E[s | coords]
};

/// Splits a score into the part for the marginal of `coords` and the conditional remainder.
ScoreSplit split_score(const DiscreteMeasure& p, std::span<const double> score,
                       const std::vector<std::string>& coords);

struct CausalScoreFactors {
  std::vector<double> x;           // E[s | X]
  std::vector<double> a_given_x;   // E[s | A, X] - E[s | X]
  std::vector<double> y_given_ax;  // s - E[s | A, X]
};

/// Factorization s = s_X + s_{A|X} + s_{Y|A,X}; covariates are all other coordinates.
CausalScoreFactors factorize_causal_score(const DiscreteMeasure& p, std::span<const double> score,
                                          const std::string& treatment = "a", const std::string& outcome = "y");

enum class InfluenceMethod { Numerical, ClosedForm };

struct OneStep {
  double plug_in = 0.0;
  double correction = 0.0;
  double estimate = 0.0;
};

/// f(P_est) + mean over the sample of phi(f; P_est; z_i).
OneStep one_step(const Functional& f, const DiscreteMeasure& p_est, const DiscreteMeasure& sample,
                 InfluenceMethod method = InfluenceMethod::Numerical, const EpsSchedule& schedule = {});

/// f(P_est) + E_true[phi(f; P_est; Z)] - f(P_true), with the closed-form influence function.
double plug_in_remainder(const Functional& f, const DiscreteMeasure& p_true, const DiscreteMeasure& p_est);

struct ArmRemainder {
  double r2 = 0.0;
  double bound = 0.0;               // ||(pi - pi_hat)/pi_hat|| * ||mu - mu_hat||
  double unweighted_product = 0.0;  // ||pi - pi_hat|| * ||mu - mu_hat||
};

struct SecondOrderRemainder {
  ArmRemainder arm1;
  ArmRemainder arm0;
  double r2 = 0.0;     // arm1.r2 - arm0.r2
  double bound = 0.0;  // arm1.bound + arm0.bound
  bool within_bound = true;
};

/// Exact second-order remainder of the ATE over discrete measures:
///   r2_a = E_true[(pi_a - pi_hat_a)(mu_a - mu_hat_a) / pi_hat_a]
/// with Cauchy-Schwarz bound in L2(P_true) over the covariate marginal.
SecondOrderRemainder second_order_remainder(const DiscreteMeasure& p_true, const DiscreteMeasure& p_est,
                                            const std::string& treatment = "a",
                                            const std::string& outcome = "y");

}  // namespace causal::eif
