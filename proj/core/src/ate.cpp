#include "causal/ate.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "causal/error.hpp"
#include "causal/stats.hpp"

namespace causal {

namespace {

void require_same_size(const ObservationalDataset& data, std::span<const double> v, const char* what) {
  if (v.size() != data.size()) {
    throw Error(ErrorKind::Validation, std::string(what) + " length differs from dataset size");
  }
}

void require_both_arms(const ObservationalDataset& data) {
  const std::size_t treated = data.treated_count();
  if (treated == 0) throw Error(ErrorKind::Arm, "no treated units");
  if (treated == data.size()) throw Error(ErrorKind::Arm, "no control units");
}

void attach_inference(AteEstimate& est, std::vector<double> eif, double level) {
  if (eif.size() >= 2) {
    const VarianceCi vc = variance_ci(eif, est.psi_hat, level);
    est.se = vc.se;
    est.ci_low = vc.ci_low;
    est.ci_high = vc.ci_high;
  }
  est.eif = std::move(eif);
}

}  // namespace

VarianceCi variance_ci(std::span<const double> eif, double psi_hat, double level) {
  if (eif.size() < 2) throw Error(ErrorKind::InsufficientData, "variance needs at least two influence values");
  const double n = static_cast<double>(eif.size());
  const double se = std::sqrt(stats::sample_variance(eif) / n);
  const double half = stats::normal_critical(level) * se;
  return {se, psi_hat - half, psi_hat + half};
}

AteEstimate naive_dim(const ObservationalDataset& data, double level) {
  require_both_arms(data);
  std::vector<double> y1;
  std::vector<double> y0;
  for (std::size_t i = 0; i < data.size(); ++i) (data.a(i) == 1 ? y1 : y0).push_back(data.y(i));

  AteEstimate est;
  est.method = "naive";
  est.n = data.size();
  est.psi_hat = stats::mean(y1) - stats::mean(y0);
  if (y1.size() >= 2 && y0.size() >= 2) {
    const double se = std::sqrt(stats::sample_variance(y1) / static_cast<double>(y1.size()) +
                                stats::sample_variance(y0) / static_cast<double>(y0.size()));
    const double half = stats::normal_critical(level) * se;
    est.se = se;
    est.ci_low = est.psi_hat - half;
    est.ci_high = est.psi_hat + half;
  }
  return est;
}

AteEstimate ipw(const ObservationalDataset& data, std::span<const double> pi_hat,
                IpwNormalization normalization, double level) {
  require_same_size(data, pi_hat, "propensity");
  const std::size_t n = data.size();
  if (n == 0) throw Error(ErrorKind::InsufficientData, "empty dataset");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pi_hat[i] > 0.0 && pi_hat[i] < 1.0)) {
      throw Error(ErrorKind::Positivity, "propensity outside (0,1) at unit " + std::to_string(i));
    }
  }

  AteEstimate est;
  est.n = n;
  const double nd = static_cast<double>(n);
  std::vector<double> eif(n);
  if (normalization == IpwNormalization::HorvitzThompson) {
    est.method = "ipw";
    std::vector<double> terms(n);
    double s1 = 0.0;
    double s0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t1 = data.a(i) * data.y(i) / pi_hat[i];
      const double t0 = (1 - data.a(i)) * data.y(i) / (1.0 - pi_hat[i]);
      s1 += t1;
      s0 += t0;
      terms[i] = t1 - t0;
    }
    est.diagnostics.psi1 = s1 / nd;
    est.diagnostics.psi0 = s0 / nd;
    est.psi_hat = s1 / nd - s0 / nd;
    for (std::size_t i = 0; i < n; ++i) eif[i] = terms[i] - est.psi_hat;
  } else {
    require_both_arms(data);
    est.method = "ipw_hajek";
    double w1 = 0.0;
    double w0 = 0.0;
    double s1 = 0.0;
    double s0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (data.a(i) == 1) {
        w1 += 1.0 / pi_hat[i];
        s1 += data.y(i) / pi_hat[i];
      } else {
        w0 += 1.0 / (1.0 - pi_hat[i]);
        s0 += data.y(i) / (1.0 - pi_hat[i]);
      }
    }
    const double m1 = s1 / w1;
    const double m0 = s0 / w0;
    est.diagnostics.psi1 = m1;
    est.diagnostics.psi0 = m0;
    est.psi_hat = m1 - m0;
    for (std::size_t i = 0; i < n; ++i) {
      eif[i] = data.a(i) == 1 ? nd * (data.y(i) - m1) / (pi_hat[i] * w1)
                              : -nd * (data.y(i) - m0) / ((1.0 - pi_hat[i]) * w0);
    }
  }
  attach_inference(est, std::move(eif), level);
  return est;
}

AteEstimate g_formula(const ObservationalDataset& data, std::span<const double> mu0_hat,
                      std::span<const double> mu1_hat) {
  require_same_size(data, mu0_hat, "mu0");
  require_same_size(data, mu1_hat, "mu1");
  if (data.empty()) throw Error(ErrorKind::InsufficientData, "empty dataset");
  AteEstimate est;
  est.method = "gformula";
  est.n = data.size();
  double s1 = 0.0;
  double s0 = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    s1 += mu1_hat[i];
    s0 += mu0_hat[i];
  }
  const double nd = static_cast<double>(data.size());
  est.diagnostics.psi1 = s1 / nd;
  est.diagnostics.psi0 = s0 / nd;
  est.psi_hat = s1 / nd - s0 / nd;
  return est;
}

MatchResult psm_att(const ObservationalDataset& data, std::span<const double> pi_hat,
                    const MatchSpec& spec, double level) {
  require_same_size(data, pi_hat, "propensity");
  require_both_arms(data);
  if (spec.caliper && !(*spec.caliper >= 0.0)) throw Error(ErrorKind::Config, "caliper must be >= 0");

  std::vector<std::size_t> controls;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.a(i) == 0) controls.push_back(i);
  }
  std::vector<bool> used(controls.size(), false);

  MatchResult result;
  std::vector<double> diffs;
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (data.a(t) != 1) continue;
    std::size_t best = controls.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < controls.size(); ++c) {
      if (!spec.with_replacement && used[c]) continue;
      const double dist = std::abs(pi_hat[t] - pi_hat[controls[c]]);
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    if (best == controls.size() || (spec.caliper && best_dist > *spec.caliper)) {
      result.unmatched_treated.push_back(t);
      continue;
    }
    if (!spec.with_replacement) used[best] = true;
    result.pairs.emplace_back(t, controls[best]);
    diffs.push_back(data.y(t) - data.y(controls[best]));
  }
  if (result.pairs.empty()) throw Error(ErrorKind::EmptyMatch, "no treated unit found a control within the caliper");

  AteEstimate& att = result.att;
  att.method = "psm";
  att.n = data.size();
  att.psi_hat = stats::mean(diffs);
  att.diagnostics.unmatched_count = result.unmatched_treated.size();
  if (diffs.size() >= 2) {
    // Pair-difference standard error; ignores reuse of controls under replacement.
    const double se = std::sqrt(stats::sample_variance(diffs) / static_cast<double>(diffs.size()));
    const double half = stats::normal_critical(level) * se;
    att.se = se;
    att.ci_low = att.psi_hat - half;
    att.ci_high = att.psi_hat + half;
  }
  return result;
}

namespace {

void check_nuisance(const ObservationalDataset& data, const NuisanceFit& nuisance) {
  require_same_size(data, nuisance.pi_hat, "propensity");
  require_same_size(data, nuisance.mu0_hat, "mu0");
  require_same_size(data, nuisance.mu1_hat, "mu1");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double p = nuisance.pi_hat[i];
    if (!(p >= nuisance.clip.lo && p <= nuisance.clip.hi && p > 0.0 && p < 1.0)) {
      throw std::logic_error("propensity at unit " + std::to_string(i) + " lies outside the clip bounds");
    }
  }
}

}  // namespace

std::vector<double> eif_closed_form(const ObservationalDataset& data, const NuisanceFit& nuisance,
                                    double psi_hat) {
  check_nuisance(data, nuisance);
  std::vector<double> phi(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double pi = nuisance.pi_hat[i];
    const double m1 = nuisance.mu1_hat[i];
    const double m0 = nuisance.mu0_hat[i];
    const bool treated = data.a(i) == 1;
    const double r1 = treated ? (data.y(i) - m1) / pi : 0.0;
    const double r0 = treated ? 0.0 : (data.y(i) - m0) / (1.0 - pi);
    phi[i] = r1 - r0 + (m1 - m0) - psi_hat;
  }
  return phi;
}

AteEstimate aipw(const ObservationalDataset& data, const NuisanceFit& nuisance, double level) {
  check_nuisance(data, nuisance);
  if (data.empty()) throw Error(ErrorKind::InsufficientData, "empty dataset");
  const std::size_t n = data.size();

  std::vector<double> terms(n);
  double s1 = 0.0;
  double s0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = nuisance.pi_hat[i];
    const int a = data.a(i);
    const double psi1_i = a * (data.y(i) - nuisance.mu1_hat[i]) / pi + nuisance.mu1_hat[i];
    const double psi0_i = (1 - a) * (data.y(i) - nuisance.mu0_hat[i]) / (1.0 - pi) + nuisance.mu0_hat[i];
    s1 += psi1_i;
    s0 += psi0_i;
    terms[i] = psi1_i - psi0_i;
  }
  double total = 0.0;
  for (double t : terms) total += t;
  const double nd = static_cast<double>(n);

  AteEstimate est;
  est.method = "aipw";
  est.n = n;
  est.psi_hat = total / nd;
  est.diagnostics.psi1 = s1 / nd;
  est.diagnostics.psi0 = s0 / nd;
  est.diagnostics.clip_count = nuisance.clip_count;

  if (nuisance.folds.k > 0 && nuisance.folds.fold_of.size() == n) {
    std::vector<double> sums(nuisance.folds.k, 0.0);
    std::vector<std::size_t> counts(nuisance.folds.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[nuisance.folds.fold_of[i]] += terms[i];
      ++counts[nuisance.folds.fold_of[i]];
    }
    double avg = 0.0;
    std::size_t nonempty = 0;
    for (std::size_t f = 0; f < sums.size(); ++f) {
      if (counts[f] == 0) continue;
      est.diagnostics.fold_means.push_back(sums[f] / static_cast<double>(counts[f]));
      avg += est.diagnostics.fold_means.back();
      ++nonempty;
    }
    if (nonempty > 0) est.diagnostics.fold_mean_average = avg / static_cast<double>(nonempty);
  }

  std::vector<double> eif(n);
  for (std::size_t i = 0; i < n; ++i) eif[i] = terms[i] - est.psi_hat;
  attach_inference(est, std::move(eif), level);
  return est;
}

}  // namespace causal
