#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msar/time_series.hpp"

namespace msar {

/// AR(p) with intercept:
///   y_t = intercept + sum_i coefficients[i-1] * y_{t-i} + e_t,  e_t ~ N(0, variance)
struct ArFit {
  int order = 0;
  double intercept = 0.0;
  std::vector<double> coefficients;
  double variance = 0.0;
  double loglik = 0.0;
  int n_effective = 0;

  // intercept / (1 - sum(coefficients)); NaN when the sum is exactly 1.
  double unconditional_mean() const;
};

// Conditional least squares on [1, y_{t-1}, ..., y_{t-p}], t = p..T-1.
// variance = RSS / (T - p).
ArFit fit_ar(const TimeSeries& series, int order);

// Conditional Gaussian log-likelihood of observations p..T-1.
double ar_loglik(const ArFit& fit, const TimeSeries& series);

// One residual per observation p..T-1.
std::vector<double> ar_residuals(const ArFit& fit, const TimeSeries& series);

// True when every root of 1 - sum a_i z^i lies outside the unit circle.
bool is_stationary(std::span<const double> coefficients);

// Draws n observations after discarding burn_in. Without initial values the
// recursion starts at the unconditional mean, which requires a stationary
// polynomial. initial_values, when given, holds the p most recent values
// oldest first and must have length p.
TimeSeries simulate_ar(const ArFit& fit, std::size_t n, std::uint64_t seed,
                       std::size_t burn_in = 0,
                       std::optional<std::vector<double>> initial_values = std::nullopt,
                       Timestamp start = Timestamp{});

}  // namespace msar
