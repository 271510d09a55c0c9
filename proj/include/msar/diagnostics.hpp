#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msar/em.hpp"
#include "msar/time_series.hpp"

namespace msar {

enum class UnitRootTest { adf, pp };
enum class Deterministic { none, constant, constant_trend };

std::string_view to_string(UnitRootTest test) noexcept;
std::string_view to_string(Deterministic variant) noexcept;

struct UnitRootResult {
  UnitRootTest test = UnitRootTest::adf;
  Deterministic variant = Deterministic::constant;
  double statistic = 0.0;
  double critical_value_5pct = 0.0;
  int lag_or_bandwidth = 0;
  bool reject_unit_root = false;  // statistic < critical_value_5pct
};

// Fixed asymptotic 5% critical values.
double adf_critical_value_5pct(Deterministic variant) noexcept;
// Throws Error{invalid_argument} for Deterministic::none.
double pp_critical_value_5pct(Deterministic variant);

// floor(12 * (T/100)^(1/4))
int schwert_lag(std::size_t n) noexcept;
// floor(4 * (T/100)^(2/9))
int newey_west_bandwidth(std::size_t n) noexcept;

UnitRootResult adf_test(const TimeSeries& series, Deterministic variant,
                        std::optional<int> lag_order = std::nullopt);
UnitRootResult pp_test(const TimeSeries& series, Deterministic variant);

double durbin_watson(std::span<const double> residuals);

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
  double hqc = 0.0;
};

InformationCriteria info_criteria(double loglik, int k_params, std::size_t n);

enum class ModelFamily { ar, msar };

struct CriteriaRow {
  std::string model_label;
  ModelFamily family = ModelFamily::ar;
  int ar_order = 0;
  int k_params = 0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double hqc = 0.0;
  std::optional<std::string> error;  // set when the fit failed
};

struct SelectionConfig {
  int n_regimes = 2;
  VarianceMode variance_mode = VarianceMode::per_regime;
  EmConfig em;
};

struct SelectionResult {
  std::vector<CriteriaRow> rows;        // ranked by AIC, failures last
  std::vector<MsArFit> msar_fits;       // successful MS fits, by order
};

std::string model_label(ModelFamily family, int n_regimes, int ar_order);

// Fits AR(p) and/or MS(K)-AR(p) for every p in orders, each conditioned on
// the same max(orders) presample points so log-likelihoods are comparable.
// Criteria use n = series length. Individual fit failures are recorded on
// their row; msar_fits keep the log-likelihood of that common sample.
SelectionResult select_model(const TimeSeries& series, std::span<const int> orders,
                             std::span<const ModelFamily> families,
                             const SelectionConfig& config);

}  // namespace msar
