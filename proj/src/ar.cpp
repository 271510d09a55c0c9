#include "msar/ar.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "msar/error.hpp"

namespace msar {
namespace {

void check_shape(const ArFit& fit, const TimeSeries& series) {
  if (fit.order < 1 || fit.coefficients.size() != static_cast<std::size_t>(fit.order)) {
    throw Error(ErrorCode::invalid_parameter, "AR coefficient count does not match the order");
  }
  if (series.size() <= static_cast<std::size_t>(fit.order)) {
    throw Error(ErrorCode::insufficient_data, "series length must exceed the AR order");
  }
}

double predict(const ArFit& fit, std::span<const double> y, std::size_t t) {
  double m = fit.intercept;
  for (int i = 1; i <= fit.order; ++i) m += fit.coefficients[static_cast<std::size_t>(i - 1)] * y[t - static_cast<std::size_t>(i)];
  return m;
}

}  // namespace

double ArFit::unconditional_mean() const {
  double s = 0.0;
  for (double c : coefficients) s += c;
  return s == 1.0 ? std::nan("") : intercept / (1.0 - s);
}

ArFit fit_ar(const TimeSeries& series, int order) {
  if (order < 1) throw Error(ErrorCode::invalid_argument, "AR order must be at least 1");
  const auto p = static_cast<std::size_t>(order);
  if (series.size() < p + 10) {
    throw Error(ErrorCode::insufficient_data, "AR(" + std::to_string(order) + ") needs at least " +
                                                  std::to_string(p + 10) + " observations, got " +
                                                  std::to_string(series.size()));
  }
  auto y = series.values();
  const auto n = static_cast<Eigen::Index>(series.size() - p);

  Eigen::MatrixXd x(n, order + 1);
  Eigen::VectorXd target(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto t = static_cast<std::size_t>(r) + p;
    target(r) = y[t];
    x(r, 0) = 1.0;
    for (int i = 1; i <= order; ++i) x(r, i) = y[t - static_cast<std::size_t>(i)];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < order + 1) {
    throw Error(ErrorCode::rank_deficient,
                "AR(" + std::to_string(order) + ") design matrix is rank deficient");
  }
  const Eigen::VectorXd beta = qr.solve(target);

  ArFit fit;
  fit.order = order;
  fit.intercept = beta(0);
  fit.coefficients.assign(beta.data() + 1, beta.data() + beta.size());
  fit.n_effective = static_cast<int>(n);
  const double rss = (target - x * beta).squaredNorm();
  fit.variance = rss / static_cast<double>(n);
  if (!(fit.variance > 0.0)) fit.variance = std::numeric_limits<double>::min();
  fit.loglik = ar_loglik(fit, series);
  return fit;
}

double ar_loglik(const ArFit& fit, const TimeSeries& series) {
  check_shape(fit, series);
  if (!(fit.variance > 0.0)) throw Error(ErrorCode::invalid_parameter, "AR variance must be positive");
  auto y = series.values();
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi * fit.variance);
  double ll = 0.0;
  for (std::size_t t = static_cast<std::size_t>(fit.order); t < y.size(); ++t) {
    const double e = y[t] - predict(fit, y, t);
    ll -= log_norm + 0.5 * e * e / fit.variance;
  }
  return ll;
}

std::vector<double> ar_residuals(const ArFit& fit, const TimeSeries& series) {
  check_shape(fit, series);
  auto y = series.values();
  std::vector<double> out;
  out.reserve(y.size() - static_cast<std::size_t>(fit.order));
  for (std::size_t t = static_cast<std::size_t>(fit.order); t < y.size(); ++t) out.push_back(y[t] - predict(fit, y, t));
  return out;
}

bool is_stationary(std::span<const double> coefficients) {
  const auto p = static_cast<Eigen::Index>(coefficients.size());
  if (p == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = coefficients[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  // Roots on the unit circle come back as 1 - eps; treat them as non-stationary.
  return es.eigenvalues().cwiseAbs().maxCoeff() < 1.0 - 1e-10;
}

TimeSeries simulate_ar(const ArFit& fit, std::size_t n, std::uint64_t seed, std::size_t burn_in,
                       std::optional<std::vector<double>> initial_values, Timestamp start) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "simulate_ar needs n >= 1");
  if (fit.order < 1 || fit.coefficients.size() != static_cast<std::size_t>(fit.order)) {
    throw Error(ErrorCode::invalid_parameter, "AR coefficient count does not match the order");
  }
  if (fit.variance < 0.0) throw Error(ErrorCode::invalid_parameter, "AR variance must be non-negative");
  const auto p = static_cast<std::size_t>(fit.order);

  std::vector<double> path;
  path.reserve(p + burn_in + n);
  if (initial_values) {
    if (initial_values->size() != p) {
      throw Error(ErrorCode::invalid_argument, "initial values must have length p");
    }
    path = *initial_values;
  } else {
    if (!is_stationary(fit.coefficients)) {
      throw Error(ErrorCode::invalid_parameter,
                  "non-stationary AR coefficients need explicit initial values");
    }
    path.assign(p, fit.unconditional_mean());
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sd = std::sqrt(fit.variance);
  for (std::size_t i = 0; i < burn_in + n; ++i) {
    const std::size_t t = path.size();
    double value = predict(fit, path, t);
    if (sd > 0.0) value += sd * noise(rng);
    path.push_back(value);
  }
  return TimeSeries(std::vector<double>(path.end() - static_cast<std::ptrdiff_t>(n), path.end()), start);
}

}  // namespace msar
