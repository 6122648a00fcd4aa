#include "causal/regression.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "causal/error.hpp"
#include "causal/stats.hpp"

namespace causal {

Eigen::MatrixXd expand_features(const Eigen::Ref<const Eigen::MatrixXd>& x, FeatureMap map) {
  if (map == FeatureMap::Linear) return x;
  Eigen::MatrixXd out(x.rows(), 2 * x.cols());
  out.leftCols(x.cols()) = x;
  out.rightCols(x.cols()) = x.array().square().matrix();
  return out;
}

Eigen::MatrixXd with_intercept(const Eigen::Ref<const Eigen::MatrixXd>& features) {
  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(features.cols()) = features;
  return design;
}

Eigen::VectorXd solve_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                    const Eigen::Ref<const Eigen::VectorXd>& y, double lambda,
                                    std::optional<Eigen::VectorXd> weights) {
  if (lambda < 0.0) throw Error(ErrorKind::Config, "ridge lambda must be non-negative");
  if (design.rows() != y.size()) throw Error(ErrorKind::Validation, "design and response lengths differ");
  const Eigen::Index p = design.cols();

  Eigen::MatrixXd weighted = design;
  Eigen::VectorXd wy = y;
  if (weights) {
    if (weights->size() != y.size()) throw Error(ErrorKind::Validation, "weight length differs");
    const Eigen::VectorXd root = weights->array().sqrt();
    weighted = root.asDiagonal() * design;
    wy = root.asDiagonal() * y;
  }

  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(weighted);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
      throw Error(ErrorKind::Rank, "design is rank deficient (rank " + std::to_string(qr.rank()) +
                                       " < " + std::to_string(p) +
                                       "); use a positive ridge lambda or drop collinear columns");
    }
    return qr.solve(wy);
  }

  Eigen::MatrixXd gram = weighted.transpose() * weighted;
  for (Eigen::Index j = 1; j < p; ++j) gram(j, j) += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorKind::Rank, "penalized normal equations are not positive definite");
  }
  return ldlt.solve(weighted.transpose() * wy);
}

Eigen::MatrixXd robust_covariance(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                  const Eigen::Ref<const Eigen::VectorXd>& residuals,
                                  std::optional<Eigen::VectorXd> weights) {
  Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(design.rows());
  const Eigen::MatrixXd bread = (design.transpose() * w.asDiagonal() * design).inverse();
  const Eigen::VectorXd score_weight = (w.array() * residuals.array()).square();
  const Eigen::MatrixXd meat = design.transpose() * score_weight.asDiagonal() * design;
  return bread * meat * bread;
}

// ---------------------------------------------------------------------------

namespace {

double linear_predictor(const Eigen::VectorXd& beta, FeatureMap map, std::span<const double> x) {
  const auto d = static_cast<Eigen::Index>(x.size());
  const Eigen::Index expected = map == FeatureMap::Linear ? d + 1 : 2 * d + 1;
  if (beta.size() != expected) throw Error(ErrorKind::Validation, "covariate dimension differs from model");
  double eta = beta(0);
  for (Eigen::Index j = 0; j < d; ++j) {
    eta += beta(1 + j) * x[static_cast<std::size_t>(j)];
    if (map == FeatureMap::LinearPlusQuadratic) {
      eta += beta(1 + d + j) * x[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    }
  }
  return eta;
}

}  // namespace

double OutcomeModel::predict(std::span<const double> x) const {
  return linear_predictor(coefficients, feature_map, x);
}

Eigen::VectorXd OutcomeModel::predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  return with_intercept(expand_features(x, feature_map)) * coefficients;
}

OutcomeModel fit_linear(const Eigen::Ref<const Eigen::MatrixXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y, double ridge_lambda,
                        FeatureMap map) {
  OutcomeModel model;
  model.ridge_lambda = ridge_lambda;
  model.feature_map = map;
  model.coefficients = solve_least_squares(with_intercept(expand_features(x, map)), y, ridge_lambda);
  return model;
}

// ---------------------------------------------------------------------------

double PropensityModel::predict(std::span<const double> x) const {
  return stats::logistic(linear_predictor(coefficients, feature_map, x));
}

Eigen::VectorXd PropensityModel::predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const Eigen::VectorXd eta = with_intercept(expand_features(x, feature_map)) * coefficients;
  return eta.unaryExpr([](double t) { return stats::logistic(t); });
}

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& design, std::span<const int> a,
                          const Eigen::Ref<const Eigen::VectorXd>& coefficients, double ridge_lambda) {
  const Eigen::VectorXd eta = design * coefficients;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += a[static_cast<std::size_t>(i)] * eta(i) - softplus(eta(i));
  }
  return ll - 0.5 * ridge_lambda * coefficients.tail(coefficients.size() - 1).squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                  std::span<const int> a,
                                  const Eigen::Ref<const Eigen::VectorXd>& coefficients,
                                  double ridge_lambda) {
  const Eigen::VectorXd eta = design * coefficients;
  Eigen::VectorXd residual(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    residual(i) = a[static_cast<std::size_t>(i)] - stats::logistic(eta(i));
  }
  Eigen::VectorXd grad = design.transpose() * residual;
  grad.tail(grad.size() - 1) -= ridge_lambda * coefficients.tail(coefficients.size() - 1);
  return grad;
}

PropensityModel fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> a,
                             const LogisticOptions& options) {
  if (options.ridge_lambda < 0.0) throw Error(ErrorKind::Config, "ridge lambda must be non-negative");
  if (static_cast<std::size_t>(x.rows()) != a.size()) {
    throw Error(ErrorKind::Validation, "covariate rows differ from treatment length");
  }
  if (a.empty()) throw Error(ErrorKind::InsufficientData, "logistic fit on zero units");
  const auto treated = std::count(a.begin(), a.end(), 1);
  if (treated == 0 || static_cast<std::size_t>(treated) == a.size()) {
    throw Error(ErrorKind::Separation,
                "treatment is constant; the unpenalized intercept has no finite maximum");
  }

  const Eigen::MatrixXd design = with_intercept(expand_features(x, options.feature_map));
  const Eigen::Index p = design.cols();
  const double lambda = options.ridge_lambda;

  PropensityModel model;
  model.ridge_lambda = lambda;
  model.feature_map = options.feature_map;
  model.coefficients = Eigen::VectorXd::Zero(p);
  const double share = static_cast<double>(treated) / static_cast<double>(a.size());
  model.coefficients(0) = std::log(share / (1.0 - share));

  double objective = logistic_objective(design, a, model.coefficients, lambda);
  model.objective_trace.push_back(objective);

  Eigen::VectorXd grad = logistic_gradient(design, a, model.coefficients, lambda);
  model.max_abs_gradient = grad.cwiseAbs().maxCoeff();
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, lambda);
  penalty(0) = 0.0;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (model.max_abs_gradient < options.tol) {
      model.converged = true;
      break;
    }
    const Eigen::VectorXd eta = design * model.coefficients;
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double pi = stats::logistic(eta(i));
      w(i) = std::max(pi * (1.0 - pi), 1e-12);
    }
    Eigen::MatrixXd hessian = design.transpose() * w.asDiagonal() * design;
    hessian.diagonal() += penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      step = hessian.completeOrthogonalDecomposition().solve(grad);
    }

    // Near the optimum the objective gain falls below rounding, so accept ties within it.
    const double slack = 1e-12 * (1.0 + std::abs(objective));
    double scale = 1.0;
    Eigen::VectorXd candidate = model.coefficients + step;
    double next = logistic_objective(design, a, candidate, lambda);
    int halvings = 0;
    while (!(next >= objective - slack) && halvings < 50) {
      scale *= 0.5;
      candidate = model.coefficients + scale * step;
      next = logistic_objective(design, a, candidate, lambda);
      ++halvings;
    }
    model.iterations = iter + 1;
    if (!(next >= objective - slack)) break;  // no ascent direction left at machine precision
    model.coefficients = candidate;
    objective = next;
    model.objective_trace.push_back(objective);
    grad = logistic_gradient(design, a, model.coefficients, lambda);
    model.max_abs_gradient = grad.cwiseAbs().maxCoeff();
  }
  if (model.max_abs_gradient < options.tol) model.converged = true;
  return model;
}

}  // namespace causal
