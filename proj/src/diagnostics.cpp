#include "msar/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "msar/ar.hpp"
#include "msar/error.hpp"

namespace msar {
namespace {

constexpr std::size_t kMinUnitRootLength = 30;

struct Regression {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  double s2 = 0.0;            // RSS / (n - k)
  double se_first = 0.0;      // standard error of coefficient 0
};

// OLS with the coefficient of interest in column 0.
Regression ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (n <= k) throw Error(ErrorCode::insufficient_data, "too few observations after lagging");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  Regression r;
  r.coefficients = qr.solve(y);
  r.residuals = y - x * r.coefficients;
  r.s2 = r.residuals.squaredNorm() / static_cast<double>(n - k);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  if ((R.diagonal().array().abs() < 1e-12 * R.diagonal().array().abs().maxCoeff()).any()) {
    throw Error(ErrorCode::rank_deficient, "unit-root regression is rank deficient");
  }
  // [(X'X)^{-1}]_{00} = || R^{-T} e_0 ||^2
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(k);
  e0(0) = 1.0;
  const Eigen::VectorXd z = R.transpose().triangularView<Eigen::Lower>().solve(e0);
  r.se_first = std::sqrt(r.s2 * z.squaredNorm());
  return r;
}

void check_unit_root_input(const TimeSeries& series) {
  if (series.size() < kMinUnitRootLength) {
    throw Error(ErrorCode::insufficient_data, "unit-root tests need at least 30 observations, got " +
                                                  std::to_string(series.size()));
  }
}

int deterministic_columns(Deterministic variant) {
  switch (variant) {
    case Deterministic::none: return 0;
    case Deterministic::constant: return 1;
    case Deterministic::constant_trend: return 2;
  }
  return 0;
}

void fill_deterministic(Eigen::MatrixXd& x, Eigen::Index row, Eigen::Index first_col, Deterministic variant,
                        double time) {
  if (variant == Deterministic::none) return;
  x(row, first_col) = 1.0;
  if (variant == Deterministic::constant_trend) x(row, first_col + 1) = time;
}

}  // namespace

std::string_view to_string(UnitRootTest test) noexcept { return test == UnitRootTest::adf ? "ADF" : "PP"; }

std::string_view to_string(Deterministic variant) noexcept {
  switch (variant) {
    case Deterministic::none: return "none";
    case Deterministic::constant: return "constant";
    case Deterministic::constant_trend: return "constant_trend";
  }
  return "none";
}

double adf_critical_value_5pct(Deterministic variant) noexcept {
  switch (variant) {
    case Deterministic::none: return -1.95;
    case Deterministic::constant: return -2.86;
    case Deterministic::constant_trend: return -3.41;
  }
  return -2.86;
}

double pp_critical_value_5pct(Deterministic variant) {
  switch (variant) {
    case Deterministic::constant: return -2.862418;
    case Deterministic::constant_trend: return -3.413069;
    case Deterministic::none: break;
  }
  throw Error(ErrorCode::invalid_argument, "the PP test supports the constant and constant_trend variants");
}

int schwert_lag(std::size_t n) noexcept {
  return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

int newey_west_bandwidth(std::size_t n) noexcept {
  return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
}

UnitRootResult adf_test(const TimeSeries& series, Deterministic variant, std::optional<int> lag_order) {
  check_unit_root_input(series);
  const int lags = lag_order.value_or(schwert_lag(series.size()));
  if (lags < 0) throw Error(ErrorCode::invalid_argument, "ADF lag order must be non-negative");
  const auto y = series.values();
  const auto T = static_cast<Eigen::Index>(y.size());
  // Regression rows t = lags+1 .. T-1 on dy_t = y_t - y_{t-1}.
  const Eigen::Index n = T - 1 - lags;
  const int det = deterministic_columns(variant);
  const Eigen::Index k = 1 + lags + det;
  if (n <= k + 1) {
    throw Error(ErrorCode::insufficient_data, "series too short for ADF with " + std::to_string(lags) + " lags");
  }
  Eigen::MatrixXd x(n, k);
  Eigen::VectorXd target(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index t = r + lags + 1;
    target(r) = y[static_cast<std::size_t>(t)] - y[static_cast<std::size_t>(t - 1)];
    x(r, 0) = y[static_cast<std::size_t>(t - 1)];
    for (int i = 1; i <= lags; ++i) {
      x(r, i) = y[static_cast<std::size_t>(t - i)] - y[static_cast<std::size_t>(t - i - 1)];
    }
    fill_deterministic(x, r, 1 + lags, variant, static_cast<double>(t));
  }
  const auto fit = ols(x, target);

  UnitRootResult out;
  out.test = UnitRootTest::adf;
  out.variant = variant;
  out.lag_or_bandwidth = lags;
  out.statistic = fit.coefficients(0) / fit.se_first;
  out.critical_value_5pct = adf_critical_value_5pct(variant);
  out.reject_unit_root = out.statistic < out.critical_value_5pct;
  return out;
}

UnitRootResult pp_test(const TimeSeries& series, Deterministic variant) {
  check_unit_root_input(series);
  const double critical = pp_critical_value_5pct(variant);
  const auto y = series.values();
  const auto n = static_cast<Eigen::Index>(y.size()) - 1;
  const int det = deterministic_columns(variant);
  Eigen::MatrixXd x(n, 1 + det);
  Eigen::VectorXd target(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    target(r) = y[static_cast<std::size_t>(r + 1)];
    x(r, 0) = y[static_cast<std::size_t>(r)];
    fill_deterministic(x, r, 1, variant, static_cast<double>(r + 1));
  }
  const auto fit = ols(x, target);
  const auto& u = fit.residuals;
  const double nd = static_cast<double>(n);

  const int bandwidth = newey_west_bandwidth(y.size());
  const double gamma0 = u.squaredNorm() / nd;
  double lrv = gamma0;
  for (int j = 1; j <= bandwidth; ++j) {
    const double gj = u.tail(n - j).dot(u.head(n - j)) / nd;
    lrv += 2.0 * (1.0 - static_cast<double>(j) / (bandwidth + 1.0)) * gj;
  }
  const double t_rho = (fit.coefficients(0) - 1.0) / fit.se_first;
  const double lambda = std::sqrt(lrv);
  const double z_tau = std::sqrt(gamma0 / lrv) * t_rho -
                       0.5 * (lrv - gamma0) / lambda * (nd * fit.se_first / std::sqrt(fit.s2));

  UnitRootResult out;
  out.test = UnitRootTest::pp;
  out.variant = variant;
  out.lag_or_bandwidth = bandwidth;
  out.statistic = z_tau;
  out.critical_value_5pct = critical;
  out.reject_unit_root = out.statistic < out.critical_value_5pct;
  return out;
}

double durbin_watson(std::span<const double> residuals) {
  if (residuals.size() < 2) throw Error(ErrorCode::insufficient_data, "Durbin-Watson needs at least 2 residuals");
  double num = 0.0;
  double den = residuals[0] * residuals[0];
  for (std::size_t t = 1; t < residuals.size(); ++t) {
    const double d = residuals[t] - residuals[t - 1];
    num += d * d;
    den += residuals[t] * residuals[t];
  }
  if (!(den > 0.0)) throw Error(ErrorCode::degenerate_variance, "Durbin-Watson undefined for all-zero residuals");
  return num / den;
}

InformationCriteria info_criteria(double loglik, int k_params, std::size_t n) {
  if (k_params < 0) throw Error(ErrorCode::invalid_argument, "parameter count must be non-negative");
  if (n < 3) throw Error(ErrorCode::insufficient_data, "information criteria need n >= 3 (HQC uses ln ln n)");
  const double k = static_cast<double>(k_params);
  const double ln_n = std::log(static_cast<double>(n));
  return {2.0 * k - 2.0 * loglik, k * ln_n - 2.0 * loglik, 2.0 * k * std::log(ln_n) - 2.0 * loglik};
}

std::string model_label(ModelFamily family, int n_regimes, int ar_order) {
  if (family == ModelFamily::ar) return "AR(" + std::to_string(ar_order) + ")";
  return "MS(" + std::to_string(n_regimes) + ")-AR(" + std::to_string(ar_order) + ")";
}

SelectionResult select_model(const TimeSeries& series, std::span<const int> orders,
                             std::span<const ModelFamily> families, const SelectionConfig& config) {
  if (orders.empty() || families.empty()) {
    throw Error(ErrorCode::invalid_argument, "model selection needs at least one order and one family");
  }
  // Every candidate is scored on the same observations: order p conditions on
  // p presample values, so drop max_p - p leading points before fitting.
  const int max_p = *std::max_element(orders.begin(), orders.end());
  if (*std::min_element(orders.begin(), orders.end()) < 1) {
    throw Error(ErrorCode::invalid_argument, "model orders must be >= 1");
  }
  if (static_cast<std::size_t>(max_p) >= series.size()) {
    throw Error(ErrorCode::insufficient_data, "series shorter than the largest candidate order");
  }
  auto common_sample = [&](int p) {
    const auto skip = static_cast<std::size_t>(max_p - p);
    const auto y = series.values().subspan(skip);
    return TimeSeries(std::vector<double>(y.begin(), y.end()), series.timestamp(skip), series.step());
  };
  SelectionResult out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (ModelFamily family : families) {
    for (int p : orders) {
      CriteriaRow row;
      row.family = family;
      row.ar_order = p;
      row.model_label = model_label(family, config.n_regimes, p);
      try {
        const auto sample = common_sample(p);
        if (family == ModelFamily::ar) {
          const auto fit = fit_ar(sample, p);
          row.k_params = p + 2;
          row.loglik = fit.loglik;
        } else {
          const MsArSpec spec{config.n_regimes, p, config.variance_mode};
          auto fit = em_fit(sample, spec, config.em);
          row.k_params = spec.free_parameters();
          row.loglik = fit.loglik;
          out.msar_fits.push_back(std::move(fit));
        }
        const auto ic = info_criteria(row.loglik, row.k_params, series.size());
        row.aic = ic.aic;
        row.bic = ic.bic;
        row.hqc = ic.hqc;
      } catch (const Error& e) {
        row.error = e.what();
        row.loglik = row.aic = row.bic = row.hqc = nan;
      }
      out.rows.push_back(std::move(row));
    }
  }
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const CriteriaRow& a, const CriteriaRow& b) {
    if (a.error.has_value() != b.error.has_value()) return !a.error.has_value();
    if (a.error) return false;
    return a.aic < b.aic;
  });
  return out;
}

}  // namespace msar
