#include "causal/nuisance.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "causal/error.hpp"
#include "causal/rng.hpp"

namespace causal {

std::vector<std::size_t> FoldAssignment::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out(k, 0);
  for (std::size_t f : fold_of) ++out[f];
  return out;
}

FoldAssignment make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw Error(ErrorKind::Config, "fold count k=" + std::to_string(k) + " must satisfy 2 <= k <= n=" +
                                       std::to_string(n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  FoldAssignment folds;
  folds.k = k;
  folds.fold_of.assign(n, 0);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t s = 0; s < size; ++s) folds.fold_of[perm[pos++]] = f;
  }
  return folds;
}

Eigen::MatrixXd covariate_matrix(const ObservationalDataset& data) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.dim()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data.x(i, j);
    }
  }
  return x;
}

NuisanceFit cross_fit(const ObservationalDataset& data, std::size_t k, const LearnerConfig& learners,
                      ClipBounds clip, std::uint64_t seed) {
  return cross_fit(data, make_folds(data.size(), k, seed), learners, clip);
}

NuisanceFit cross_fit(const ObservationalDataset& data, const FoldAssignment& folds,
                      const LearnerConfig& learners, ClipBounds clip) {
  if (!(clip.lo > 0.0 && clip.lo < clip.hi && clip.hi < 1.0)) {
    throw Error(ErrorKind::Config, "clip bounds must satisfy 0 < lo < hi < 1");
  }
  if (folds.fold_of.size() != data.size()) {
    throw Error(ErrorKind::Config, "fold assignment size differs from dataset size");
  }
  const std::size_t n = data.size();
  const Eigen::MatrixXd x = covariate_matrix(data);

  NuisanceFit fit;
  fit.folds = folds;
  fit.clip = clip;
  fit.pi_hat.assign(n, 0.0);
  fit.pi_raw.assign(n, 0.0);
  fit.mu0_hat.assign(n, 0.0);
  fit.mu1_hat.assign(n, 0.0);

  for (std::size_t fold = 0; fold < folds.k; ++fold) {
    const auto train = folds.complement(fold);
    const auto held_out = folds.members(fold);

    std::vector<std::size_t> train0;
    std::vector<std::size_t> train1;
    for (std::size_t i : train) (data.a(i) == 1 ? train1 : train0).push_back(i);
    if (train0.empty() || train1.empty()) {
      throw Error(ErrorKind::Fold, "training complement of fold " + std::to_string(fold) +
                                       " has no " + (train1.empty() ? "treated" : "control") +
                                       " units");
    }

    const auto rows = [&](const std::vector<std::size_t>& idx) {
      Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
      for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
      return out;
    };
    const auto outcomes = [&](const std::vector<std::size_t>& idx) {
      Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Eigen::Index>(r)) = data.y(idx[r]);
      return out;
    };

    std::vector<int> train_a;
    train_a.reserve(train.size());
    for (std::size_t i : train) train_a.push_back(data.a(i));

    LogisticOptions options;
    options.ridge_lambda = learners.propensity_lambda;
    options.feature_map = learners.propensity_features;
    options.tol = learners.tol;
    options.max_iter = learners.max_iter;
    const PropensityModel propensity = fit_logistic(rows(train), train_a, options);
    if (!propensity.converged) ++fit.nonconverged_folds;

    OutcomeModel mu0 = fit_linear(rows(train0), outcomes(train0), learners.outcome_lambda,
                                  learners.outcome_features);
    mu0.arm = 0;
    OutcomeModel mu1 = fit_linear(rows(train1), outcomes(train1), learners.outcome_lambda,
                                  learners.outcome_features);
    mu1.arm = 1;

    const Eigen::MatrixXd x_out = rows(held_out);
    const Eigen::VectorXd pi = propensity.predict(x_out);
    const Eigen::VectorXd m0 = mu0.predict(x_out);
    const Eigen::VectorXd m1 = mu1.predict(x_out);
    for (std::size_t r = 0; r < held_out.size(); ++r) {
      const std::size_t i = held_out[r];
      const auto e = static_cast<Eigen::Index>(r);
      fit.pi_raw[i] = pi(e);
      fit.pi_hat[i] = std::clamp(pi(e), clip.lo, clip.hi);
      if (fit.pi_hat[i] != pi(e)) ++fit.clip_count;
      fit.mu0_hat[i] = m0(e);
      fit.mu1_hat[i] = m1(e);
    }
  }
  return fit;
}

}  // namespace causal
