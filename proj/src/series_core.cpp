#include "msar/series_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "msar/error.hpp"

namespace msar {
namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Autocovariance sums sum_t (y_t - m)(y_{t+k} - m) for k = 0..max_lag.
std::vector<double> autocovariance_sums(std::span<const double> y, int max_lag) {
  const double m = mean_of(y);
  std::vector<double> centered(y.size());
  std::transform(y.begin(), y.end(), centered.begin(), [m](double v) { return v - m; });
  std::vector<double> sums(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < centered.size(); ++t) {
      s += centered[t] * centered[t + static_cast<std::size_t>(k)];
    }
    sums[static_cast<std::size_t>(k)] = s;
  }
  return sums;
}

long long floor_mod(long long a, long long m) {
  long long r = a % m;
  return r < 0 ? r + m : r;
}

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Shift in steps of `series` relative to the profile anchor.
long long aligned_shift(const TimeSeries& series, const SeasonalProfile& profile) {
  if (profile.period <= 0 || profile.offsets.size() != static_cast<std::size_t>(profile.period)) {
    throw Error(ErrorCode::alignment, "seasonal profile offsets do not match its period");
  }
  if (series.step() != profile.step) {
    throw Error(ErrorCode::alignment, "series step " + std::to_string(series.step().count()) +
                                          "s differs from profile step " +
                                          std::to_string(profile.step.count()) + "s");
  }
  auto delta = (series.start() - profile.anchor).count();
  if (delta % profile.step.count() != 0) {
    throw Error(ErrorCode::alignment, "series start is not on the profile's step grid");
  }
  return delta / profile.step.count();
}

std::vector<double> apply_profile(const TimeSeries& series, const SeasonalProfile& profile,
                                  double sign) {
  const long long shift = aligned_shift(series, profile);
  std::vector<double> out(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    auto pos = floor_mod(profile.phase + shift + static_cast<long long>(t), profile.period);
    out[t] = series[t] + sign * profile.offsets[static_cast<std::size_t>(pos)];
  }
  return out;
}

}  // namespace

SummaryStats describe(const TimeSeries& series) {
  auto y = series.values();
  if (y.size() < 2) {
    throw Error(ErrorCode::insufficient_data, "describe needs at least 2 observations");
  }
  SummaryStats s;
  s.count = y.size();
  auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  s.min = *lo;
  s.max = *hi;
  s.mean = mean_of(y);
  if (s.min == s.max) {
    s.mean = s.min;
    return s;
  }
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : y) {
    const double d = v - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const auto n = static_cast<double>(y.size());
  s.std_dev = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.skewness = m3 / std::pow(m2, 1.5);
  s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return s;
}

CorrelogramResult acf(const TimeSeries& series, int max_lag) {
  if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= series.size()) {
    throw Error(ErrorCode::insufficient_data, "acf max_lag must be below the series length");
  }
  auto sums = autocovariance_sums(series.values(), max_lag);
  if (sums[0] <= 0.0) {
    throw Error(ErrorCode::degenerate_variance, "acf of a constant series is undefined");
  }
  CorrelogramResult r;
  r.confidence_bound = 1.96 / std::sqrt(static_cast<double>(series.size()));
  for (int k = 0; k <= max_lag; ++k) {
    r.lags.push_back(k);
    r.coefficients.push_back(k == 0 ? 1.0 : sums[static_cast<std::size_t>(k)] / sums[0]);
  }
  return r;
}

CorrelogramResult pacf(const TimeSeries& series, int max_lag) {
  if (max_lag < 1 || 2 * static_cast<std::size_t>(max_lag) >= series.size()) {
    throw Error(ErrorCode::insufficient_data, "pacf max_lag must be in [1, T/2)");
  }
  const auto rho = acf(series, max_lag).coefficients;

  // Durbin-Levinson: phi[k][k] is the lag-k partial autocorrelation.
  CorrelogramResult r;
  r.confidence_bound = 1.96 / std::sqrt(static_cast<double>(series.size()));
  std::vector<double> phi(static_cast<std::size_t>(max_lag) + 1, 0.0);
  std::vector<double> prev(phi.size(), 0.0);
  double v = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    double num = rho[static_cast<std::size_t>(k)];
    for (int j = 1; j < k; ++j) num -= prev[static_cast<std::size_t>(j)] * rho[static_cast<std::size_t>(k - j)];
    const double kk = num / v;
    phi[static_cast<std::size_t>(k)] = kk;
    for (int j = 1; j < k; ++j) {
      phi[static_cast<std::size_t>(j)] = prev[static_cast<std::size_t>(j)] - kk * prev[static_cast<std::size_t>(k - j)];
    }
    v *= (1.0 - kk * kk);
    prev = phi;
    r.lags.push_back(k);
    r.coefficients.push_back(std::clamp(kk, -1.0, 1.0));
  }
  return r;
}

SeasonalProfile seasonal_profile(const TimeSeries& series, int period) {
  if (period <= 0) throw Error(ErrorCode::invalid_argument, "seasonal period must be positive");
  if (series.size() < 2 * static_cast<std::size_t>(period)) {
    throw Error(ErrorCode::insufficient_data,
                "seasonal profile needs at least two full cycles (" + std::to_string(2 * period) +
                    " observations), got " + std::to_string(series.size()));
  }
  SeasonalProfile profile;
  profile.period = period;
  profile.anchor = series.start();
  profile.step = series.step();
  const auto since_epoch = series.start().time_since_epoch().count();
  profile.phase = static_cast<int>(floor_mod(floor_div(since_epoch, series.step().count()), period));

  std::vector<double> sums(static_cast<std::size_t>(period), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(period), 0);
  for (std::size_t t = 0; t < series.size(); ++t) {
    auto pos = static_cast<std::size_t>((static_cast<std::size_t>(profile.phase) + t) % static_cast<std::size_t>(period));
    sums[pos] += series[t];
    ++counts[pos];
  }
  profile.offsets.resize(static_cast<std::size_t>(period));
  for (std::size_t k = 0; k < sums.size(); ++k) profile.offsets[k] = sums[k] / static_cast<double>(counts[k]);
  return profile;
}

TimeSeries deseasonalize(const TimeSeries& series, const SeasonalProfile& profile) {
  return series.with_values(apply_profile(series, profile, -1.0));
}

TimeSeries reseasonalize(const TimeSeries& series, const SeasonalProfile& profile) {
  return series.with_values(apply_profile(series, profile, +1.0));
}

}  // namespace msar
