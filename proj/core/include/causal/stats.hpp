#pragma once

#include <optional>
#include <span>

namespace causal::stats {

double mean(std::span<const double> values);

/// Sample variance with the n-1 divisor; requires at least two values.
double sample_variance(std::span<const double> values);

double median(std::span<const double> values);

/// Standard normal quantile.
double normal_quantile(double p);

/// Two-sided normal critical value for confidence `level`, e.g. 1.959964 at 0.95.
double normal_critical(double level);

double logistic(double t);

}  // namespace causal::stats
