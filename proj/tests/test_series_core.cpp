#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "msar/series_core.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace msar;
using doctest::Approx;

namespace {

TimeSeries sinusoid_plus_ar1(std::size_t n, std::uint64_t seed) {
  auto y = fixture::ar_process(n, {0.5}, seed);
  for (std::size_t t = 0; t < n; ++t) y[t] += 10.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0);
  return TimeSeries(y);
}

}  // namespace

TEST_CASE("describe: constant series has zero spread and no shape moments") {
  const auto s = describe(TimeSeries({5.0, 5.0, 5.0, 5.0}));
  CHECK(s.mean == 5.0);
  CHECK(s.std_dev == 0.0);
  CHECK_FALSE(s.skewness.has_value());
  CHECK_FALSE(s.excess_kurtosis.has_value());
}

TEST_CASE("describe: 1..4 against the moment formulas") {
  // m2 = 1.25, m4 = 2.5625 -> excess kurtosis 2.5625 / 1.5625 - 3 = -1.36
  const auto s = describe(TimeSeries({1.0, 2.0, 3.0, 4.0}));
  CHECK(s.count == 4);
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);
  CHECK(s.mean == Approx(2.5).epsilon(1e-15));
  CHECK(s.std_dev == Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-14));
  CHECK(s.std_dev == Approx(1.2910).epsilon(1e-4));
  CHECK(std::abs(*s.skewness) < 1e-15);
  CHECK(*s.excess_kurtosis == Approx(-1.36).epsilon(1e-12));
}

TEST_CASE("describe: symmetric data has zero skewness") {
  for (double a : {0.1, 1.0, 37.5}) CHECK(std::abs(*describe(TimeSeries({-a, 0.0, a})).skewness) < 1e-15);
}

TEST_CASE("describe: needs two observations") {
  CHECK(MSAR_ERROR_CODE(describe(TimeSeries({1.0}))) == ErrorCode::insufficient_data);
}

TEST_CASE("describe: permutation and reflection properties") {
  auto y = fixture::white_noise(501, 3);
  for (auto& v : y) v = std::exp(v);  // skewed
  const auto base = describe(TimeSeries(y));
  std::mt19937_64 rng(9);
  std::shuffle(y.begin(), y.end(), rng);
  const auto shuffled = describe(TimeSeries(y));
  CHECK(shuffled.mean == Approx(base.mean).epsilon(1e-13));
  CHECK(shuffled.std_dev == Approx(base.std_dev).epsilon(1e-13));
  CHECK(base.min <= base.mean);
  CHECK(base.mean <= base.max);
  for (auto& v : y) v = -v;
  const auto reflected = describe(TimeSeries(y));
  CHECK(*reflected.skewness == -*shuffled.skewness);
}

TEST_CASE("acf: lag 0 is one and matches the defining sum") {
  const auto y = fixture::ar_process(300, {0.6}, 1);
  const auto r = acf(TimeSeries(y), 20);
  const auto ref = oracle::acf(y, 20);
  CHECK(r.lags.front() == 0);
  CHECK(r.at(0) == 1.0);
  CHECK(r.confidence_bound == Approx(1.96 / std::sqrt(300.0)));
  for (int k = 0; k <= 20; ++k) {
    CHECK(r.at(k) == Approx(ref[static_cast<std::size_t>(k)]).epsilon(1e-12));
    CHECK(std::abs(r.at(k)) <= 1.0);
  }
}

TEST_CASE("acf: alternating sequence has lag-1 correlation near -1") {
  std::vector<double> y(1000);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = t % 2 == 0 ? 1.0 : -1.0;
  CHECK(std::abs(acf(TimeSeries(y), 1).at(1) + 1.0) < 0.01);
}

TEST_CASE("acf: white noise is uncorrelated at lag 1") {
  CHECK(std::abs(acf(TimeSeries(fixture::white_noise(5000, 11)), 1).at(1)) < 0.05);
}

TEST_CASE("acf: invariant under positive affine maps") {
  auto y = fixture::ar_process(400, {0.3, 0.2}, 5);
  const auto base = acf(TimeSeries(y), 15);
  for (auto& v : y) v = 3.0 + 2.5 * v;
  const auto moved = acf(TimeSeries(y), 15);
  for (int k = 0; k <= 15; ++k) CHECK(std::abs(base.at(k) - moved.at(k)) < 1e-12);
}

TEST_CASE("acf: error paths") {
  CHECK(MSAR_ERROR_CODE(acf(TimeSeries({2.0, 2.0, 2.0}), 1)) == ErrorCode::degenerate_variance);
  CHECK(MSAR_ERROR_CODE(acf(TimeSeries({1.0, 2.0, 3.0}), 3)) == ErrorCode::insufficient_data);
}

TEST_CASE("pacf: lag 1 equals acf lag 1") {
  const TimeSeries s(fixture::ar_process(500, {0.4}, 2));
  CHECK(pacf(s, 5).at(1) == Approx(acf(s, 1).at(1)).epsilon(1e-14));
}

TEST_CASE("pacf: recovers AR(1) and AR(2) structure") {
  const auto p1 = pacf(TimeSeries(fixture::ar_process(5000, {0.5}, 21)), 2);
  CHECK(std::abs(p1.at(1) - 0.5) < 0.05);
  CHECK(std::abs(p1.at(2)) < 0.05);
  const auto p2 = pacf(TimeSeries(fixture::ar_process(5000, {0.4, 0.3}, 22)), 2);
  CHECK(std::abs(p2.at(2) - 0.3) < 0.05);
}

TEST_CASE("pacf: Durbin-Levinson agrees with per-lag regressions on the sample ACF") {
  const auto y = fixture::ar_process(200, {0.5, -0.2, 0.1}, 8);
  const auto r = pacf(TimeSeries(y), 10);
  const auto ref = oracle::pacf_regressions(y, 10);
  for (int k = 1; k <= 10; ++k) CHECK(std::abs(r.at(k) - ref[static_cast<std::size_t>(k - 1)]) < 1e-8);
}

TEST_CASE("pacf: max_lag bounds") {
  const TimeSeries s(fixture::white_noise(20, 1));
  CHECK(MSAR_ERROR_CODE(pacf(s, 10)) == ErrorCode::insufficient_data);
  CHECK(MSAR_ERROR_CODE(pacf(s, 0)) == ErrorCode::insufficient_data);
  CHECK_FALSE(MSAR_ERROR_CODE(pacf(s, 9)).has_value());
}

TEST_CASE("seasonal_profile: constant series") {
  const auto p = seasonal_profile(TimeSeries(std::vector<double>(72, 4.25)), 24);
  CHECK(p.period == 24);
  for (double o : p.offsets) CHECK(o == 4.25);
}

TEST_CASE("seasonal_profile: exact cycle means of a sinusoid") {
  std::vector<double> y(2400);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = 10.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0);
  const auto p = seasonal_profile(TimeSeries(y), 24);
  CHECK(p.phase == 0);
  for (int k = 0; k < 24; ++k) {
    CHECK(std::abs(p.offsets[static_cast<std::size_t>(k)] - y[static_cast<std::size_t>(k)]) < 1e-9);
  }
}

TEST_CASE("seasonal_profile: noise offsets stay near the global mean") {
  // sd 0.2 puts the 0.1 band at about 7 standard errors of a 200-point mean.
  const auto y = fixture::white_noise(4800, 17, 0.2);
  const auto p = seasonal_profile(TimeSeries(y), 24);
  const double m = oracle::mean(y);
  for (double o : p.offsets) CHECK(std::abs(o - m) < 0.1);
}

TEST_CASE("seasonal_profile: phase follows the clock and incomplete cycles count") {
  using namespace std::chrono;
  // Starts at 06:00, 50 values: positions 6..23 appear three times, 0..5 twice.
  std::vector<double> y(50);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = static_cast<double>(t);
  const TimeSeries s(y, sys_days{year{2014} / 1 / 1} + hours{6});
  const auto p = seasonal_profile(s, 24);
  CHECK(p.phase == 6);
  CHECK(p.offsets[6] == Approx((0.0 + 24.0 + 48.0) / 3.0));
  CHECK(p.offsets[0] == Approx((18.0 + 42.0) / 2.0));
  CHECK(MSAR_ERROR_CODE(seasonal_profile(TimeSeries(std::vector<double>(47, 1.0)), 24)) == ErrorCode::insufficient_data);
}

TEST_CASE("deseasonalize: constant series with its own profile is zero") {
  const TimeSeries s(std::vector<double>(48, 3.0));
  const auto d = deseasonalize(s, seasonal_profile(s, 24));
  for (double v : d.values()) CHECK(v == 0.0);
}

TEST_CASE("deseasonalize and reseasonalize are inverse") {
  const auto s = sinusoid_plus_ar1(1000, 4);
  const auto p = seasonal_profile(s, 24);
  const auto back = reseasonalize(deseasonalize(s, p), p);
  for (std::size_t t = 0; t < s.size(); ++t) CHECK(std::abs(back[t] - s[t]) < 1e-12);
}

TEST_CASE("reseasonalize: zeros give the tiled profile; one cycle adds elementwise") {
  std::vector<double> offsets(24);
  for (int k = 0; k < 24; ++k) offsets[static_cast<std::size_t>(k)] = k * 0.5 - 3.0;
  SeasonalProfile p{24, offsets, 0, Timestamp{}, TimeSeries::kHourly};
  const auto tiled = reseasonalize(TimeSeries(std::vector<double>(60, 0.0)), p);
  for (std::size_t t = 0; t < 60; ++t) CHECK(tiled[t] == offsets[t % 24]);
  std::vector<double> one(24);
  for (std::size_t t = 0; t < 24; ++t) one[t] = static_cast<double>(t * t);
  const auto summed = reseasonalize(TimeSeries(one), p);
  for (std::size_t t = 0; t < 24; ++t) CHECK(summed[t] == one[t] + offsets[t]);
}

TEST_CASE("deseasonalize: profile applies to a later window of the same clock") {
  using namespace std::chrono;
  const auto s = sinusoid_plus_ar1(480, 6);
  const auto p = seasonal_profile(s, 24);
  std::vector<double> tail(s.values().begin() + 7, s.values().end());
  const TimeSeries later(tail, s.timestamp(7));
  const auto full = deseasonalize(s, p);
  const auto part = deseasonalize(later, p);
  for (std::size_t t = 0; t < later.size(); ++t) CHECK(part[t] == full[t + 7]);
}

TEST_CASE("deseasonalize: misaligned metadata is an alignment error") {
  using namespace std::chrono;
  const auto s = sinusoid_plus_ar1(96, 1);
  auto p = seasonal_profile(s, 24);
  CHECK(MSAR_ERROR_CODE(deseasonalize(TimeSeries(std::vector<double>(96, 1.0), s.start() + minutes{30}), p)) ==
        ErrorCode::alignment);
  CHECK(MSAR_ERROR_CODE(deseasonalize(TimeSeries(std::vector<double>(96, 1.0), s.start(), minutes{30}), p)) ==
        ErrorCode::alignment);
  p.offsets.pop_back();
  CHECK(MSAR_ERROR_CODE(deseasonalize(s, p)) == ErrorCode::alignment);
}

TEST_CASE("deseasonalized series has a flat profile and loses the lag-24 peak") {
  const auto s = sinusoid_plus_ar1(2400, 12);
  const auto d = deseasonalize(s, seasonal_profile(s, 24));
  for (double o : seasonal_profile(d, 24).offsets) CHECK(std::abs(o) < 1e-9);
  CHECK(acf(s, 24).at(24) > 0.8);
  CHECK(std::abs(acf(d, 24).at(24)) < 0.1);
}
