#include "causal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "causal/error.hpp"

namespace causal::stats {

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::InsufficientData, "mean of an empty sequence");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "sample variance needs at least two values");
  }
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::InsufficientData, "median of an empty sequence");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  if (sorted.size() % 2 == 1) return sorted[mid];
  return 0.5 * (sorted[mid - 1] + sorted[mid]);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::Config, "quantile probability must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_critical(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::Config, "confidence level must lie in (0, 1)");
  return normal_quantile(0.5 + 0.5 * level);
}

double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace causal::stats
