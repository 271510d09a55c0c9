// Shared fixtures for the test suites.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "msar/error.hpp"

// Runs expr and reports the msar::ErrorCode it threw, or nullopt.
#define MSAR_ERROR_CODE(expr)                        \
  ([&]() -> std::optional<msar::ErrorCode> {         \
    try {                                            \
      (void)(expr);                                  \
    } catch (const msar::Error& e) {                 \
      return e.code();                               \
    }                                                \
    return std::nullopt;                             \
  }())

namespace fixture {

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = z(rng);
  return out;
}

// y_t = c + sum phi_i y_{t-i} + e_t, started at zero with a 500-step burn-in.
inline std::vector<double> ar_process(std::size_t n, std::vector<double> phi, std::uint64_t seed, double c = 0.0) {
  const auto e = white_noise(n + 500, seed);
  std::vector<double> y(n + 500, 0.0);
  for (std::size_t t = 0; t < y.size(); ++t) {
    double v = c + e[t];
    for (std::size_t i = 1; i <= phi.size() && i <= t; ++i) v += phi[i - 1] * y[t - i];
    y[t] = v;
  }
  return {y.begin() + 500, y.end()};
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
  auto e = white_noise(n, seed);
  for (std::size_t t = 1; t < n; ++t) e[t] += e[t - 1];
  return e;
}

}  // namespace fixture
