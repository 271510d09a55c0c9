#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <vector>

#include "msar/time_series.hpp"

namespace msar {

/// Descriptive statistics of a series.
///
/// std_dev uses the n-1 denominator. skewness and excess_kurtosis are the
/// population central-moment ratios m3/m2^1.5 and m4/m2^2 - 3; both are
/// empty for a constant series rather than NaN.
struct SummaryStats {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
  std::optional<double> skewness;
  std::optional<double> excess_kurtosis;
};

struct CorrelogramResult {
  std::vector<int> lags;
  std::vector<double> coefficients;
  double confidence_bound = 0.0;  // 1.96 / sqrt(T)

  double at(int lag) const { return coefficients.at(static_cast<std::size_t>(lag - lags.front())); }
};

/// Per-cycle-position means of a periodic component.
///
/// offsets[k] is the mean of all observations whose cycle position is k.
/// Cycle positions count from the epoch in units of the series step, so a
/// profile estimated on hourly data starting at 06:00 has phase 6 and
/// offsets[0] is the midnight level. anchor and step record the timing of
/// the series the profile was estimated on.
struct SeasonalProfile {
  int period = 0;
  std::vector<double> offsets;
  int phase = 0;
  Timestamp anchor{};
  std::chrono::seconds step{TimeSeries::kHourly};
};

SummaryStats describe(const TimeSeries& series);

// Sample autocorrelation for lags 0..max_lag.
CorrelogramResult acf(const TimeSeries& series, int max_lag);

// Partial autocorrelation for lags 1..max_lag (Durbin-Levinson on the
// sample ACF).
CorrelogramResult pacf(const TimeSeries& series, int max_lag);

SeasonalProfile seasonal_profile(const TimeSeries& series, int period = 24);
TimeSeries deseasonalize(const TimeSeries& series, const SeasonalProfile& profile);
TimeSeries reseasonalize(const TimeSeries& series, const SeasonalProfile& profile);

}  // namespace msar
