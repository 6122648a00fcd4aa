#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace causal {

enum class FeatureMap { Linear, LinearPlusQuadratic };

/// Raw covariates (n x d) expanded by `map`, without an intercept column.
/// LinearPlusQuadratic appends the square of every column (no interactions).
Eigen::MatrixXd expand_features(const Eigen::Ref<const Eigen::MatrixXd>& x, FeatureMap map);

/// Prepends a column of ones.
Eigen::MatrixXd with_intercept(const Eigen::Ref<const Eigen::MatrixXd>& features);

/// Least squares on a design that already contains its intercept column.
/// Ridge penalty `lambda` applies to every column except the first.
/// With lambda == 0 a rank-deficient design throws ErrorKind::Rank.
Eigen::VectorXd solve_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                    const Eigen::Ref<const Eigen::VectorXd>& y, double lambda = 0.0,
                                    std::optional<Eigen::VectorXd> weights = std::nullopt);

/// Heteroskedasticity-robust (HC0) covariance (X'WX)^-1 X'W diag(e^2) W X (X'WX)^-1.
Eigen::MatrixXd robust_covariance(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                  const Eigen::Ref<const Eigen::VectorXd>& residuals,
                                  std::optional<Eigen::VectorXd> weights = std::nullopt);

struct OutcomeModel {
  Eigen::VectorXd coefficients;  // intercept first
  double ridge_lambda = 0.0;
  int arm = -1;                  // -1 when not fitted on a single arm
  FeatureMap feature_map = FeatureMap::Linear;

  double predict(std::span<const double> x) const;
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

/// Penalized least squares of y on (1, features(x)).
OutcomeModel fit_linear(const Eigen::Ref<const Eigen::MatrixXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y, double ridge_lambda = 0.0,
                        FeatureMap map = FeatureMap::Linear);

struct PropensityModel {
  Eigen::VectorXd coefficients;  // intercept first
  double ridge_lambda = 0.0;
  FeatureMap feature_map = FeatureMap::Linear;
  bool converged = false;
  int iterations = 0;
  double max_abs_gradient = 0.0;
  std::vector<double> objective_trace;  // penalized log-likelihood after each accepted step

  double predict(std::span<const double> x) const;
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

struct LogisticOptions {
  double ridge_lambda = 0.0;
  double tol = 1e-8;
  int max_iter = 100;
  FeatureMap feature_map = FeatureMap::Linear;
};

/// Ridge-penalized logistic regression by Newton/IRLS with step halving.
///
/// Maximizes sum_i [a_i log p_i + (1-a_i) log(1-p_i)] - lambda/2 * |beta_slopes|^2.
/// The intercept is not penalized. Convergence means max |gradient| < tol.
/// A constant treatment vector has no finite MLE and throws ErrorKind::Separation.
PropensityModel fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& x,
                             std::span<const int> a, const LogisticOptions& options = {});

/// Gradient of the penalized log-likelihood at `coefficients` (design includes intercept).
Eigen::VectorXd logistic_gradient(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                  std::span<const int> a,
                                  const Eigen::Ref<const Eigen::VectorXd>& coefficients,
                                  double ridge_lambda);

double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& design, std::span<const int> a,
                          const Eigen::Ref<const Eigen::VectorXd>& coefficients, double ridge_lambda);

}  // namespace causal
