#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "causal/data.hpp"
#include "causal/regression.hpp"

namespace causal {

/// Fold label per unit; fold sizes differ by at most one.
struct FoldAssignment {
  std::vector<std::size_t> fold_of;
  std::size_t k = 0;

  std::vector<std::size_t> members(std::size_t fold) const;
  std::vector<std::size_t> complement(std::size_t fold) const;
  std::vector<std::size_t> sizes() const;
};

/// Random permutation cut into k consecutive blocks; the first n % k blocks
/// get one extra unit. Requires 2 <= k <= n.
FoldAssignment make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

struct LearnerConfig {
  double propensity_lambda = 0.0;
  FeatureMap propensity_features = FeatureMap::Linear;
  double outcome_lambda = 0.0;
  FeatureMap outcome_features = FeatureMap::Linear;
  double tol = 1e-8;
  int max_iter = 100;
};

struct ClipBounds {
  double lo = 0.01;
  double hi = 0.99;
};

/// Out-of-fold nuisance predictions.
struct NuisanceFit {
  std::vector<double> pi_hat;      // clipped
  std::vector<double> pi_raw;      // before clipping
  std::vector<double> mu0_hat;
  std::vector<double> mu1_hat;
  FoldAssignment folds;
  ClipBounds clip;
  std::size_t clip_count = 0;
  std::size_t nonconverged_folds = 0;
};

/// Dense n x d covariate matrix.
Eigen::MatrixXd covariate_matrix(const ObservationalDataset& data);

/// For each fold j, fits the propensity and both outcome models on the other
/// folds and predicts for fold j. Propensities are clipped to [clip.lo, clip.hi].
NuisanceFit cross_fit(const ObservationalDataset& data, std::size_t k, const LearnerConfig& learners,
                      ClipBounds clip, std::uint64_t seed);

/// Same as above with an explicit fold assignment.
NuisanceFit cross_fit(const ObservationalDataset& data, const FoldAssignment& folds,
                      const LearnerConfig& learners, ClipBounds clip);

}  // namespace causal
