#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "msar/diagnostics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace msar;

namespace {

constexpr std::array kVariants{Deterministic::none, Deterministic::constant, Deterministic::constant_trend};

MsArFit two_regime_generator() {
  MsArFit f;
  f.spec = {2, 1, VarianceMode::per_regime};
  f.means = Eigen::Vector2d(0.0, 10.0);
  f.ar = Eigen::MatrixXd::Constant(2, 1, 0.5);
  f.variances = Eigen::Vector2d(1.0, 1.0);
  Eigen::Matrix2d P;
  P << 0.9, 0.1, 0.2, 0.8;
  f.transition = TransitionMatrix(P);
  f.initial = ergodic_distribution(f.transition);
  return f;
}

}  // namespace

TEST_CASE("ADF statistic matches the normal-equation regression") {
  const TimeSeries rw(fixture::random_walk(400, 3));
  const TimeSeries ar(fixture::ar_process(400, {0.6}, 4));
  for (const auto* s : {&rw, &ar}) {
    for (int v = 0; v < 3; ++v) {
      for (int lags : {0, 2, 5}) {
        const auto r = adf_test(*s, kVariants[v], lags);
        CHECK(r.statistic == doctest::Approx(oracle::adf_statistic(s->values(), lags, v)).epsilon(1e-9));
        CHECK(r.lag_or_bandwidth == lags);
        CHECK(r.reject_unit_root == (r.statistic < r.critical_value_5pct));
      }
    }
  }
  CHECK(adf_test(rw, Deterministic::constant).lag_or_bandwidth == schwert_lag(400));
}

TEST_CASE("PP statistic matches the textbook Z-tau") {
  const TimeSeries rw(fixture::random_walk(500, 8));
  const TimeSeries ar(fixture::ar_process(500, {0.4, 0.2}, 9));
  for (const auto* s : {&rw, &ar}) {
    for (int v = 1; v < 3; ++v) {
      const auto r = pp_test(*s, kVariants[v]);
      CHECK(r.lag_or_bandwidth == newey_west_bandwidth(500));
      CHECK(r.statistic == doctest::Approx(oracle::pp_statistic(s->values(), v, r.lag_or_bandwidth)).epsilon(1e-9));
    }
  }
}

TEST_CASE("critical values are the fixed asymptotic 5% values") {
  CHECK(adf_critical_value_5pct(Deterministic::none) == -1.95);
  CHECK(adf_critical_value_5pct(Deterministic::constant) == -2.86);
  CHECK(adf_critical_value_5pct(Deterministic::constant_trend) == -3.41);
  CHECK(pp_critical_value_5pct(Deterministic::constant) == -2.862418);
  CHECK(pp_critical_value_5pct(Deterministic::constant_trend) == -3.413069);
  CHECK(MSAR_ERROR_CODE(pp_critical_value_5pct(Deterministic::none)) == ErrorCode::invalid_argument);
  const TimeSeries s(fixture::white_noise(100, 1));
  CHECK(MSAR_ERROR_CODE(pp_test(s, Deterministic::none)) == ErrorCode::invalid_argument);
  CHECK(adf_test(s, Deterministic::constant_trend).critical_value_5pct == -3.41);
}

TEST_CASE("lag and bandwidth rules") {
  CHECK(schwert_lag(100) == 12);
  CHECK(schwert_lag(8760) == 36);  // 12 * 87.6^0.25 = 36.6
  CHECK(newey_west_bandwidth(100) == 4);
  CHECK(newey_west_bandwidth(8760) == 10);  // 4 * 87.6^(2/9) = 10.8
}

TEST_CASE("unit-root decisions on simulated data") {
  int rw_kept = 0, ar_rejected = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    rw_kept += !adf_test(TimeSeries(fixture::random_walk(2000, seed)), Deterministic::constant).reject_unit_root;
    ar_rejected += pp_test(TimeSeries(fixture::ar_process(2000, {0.5}, seed)), Deterministic::constant).reject_unit_root;
  }
  CHECK(rw_kept >= 16);
  CHECK(ar_rejected == 20);
}

TEST_CASE("PP on white noise is strongly negative") {
  const TimeSeries s(fixture::white_noise(5000, 12));
  for (auto v : {Deterministic::constant, Deterministic::constant_trend}) {
    const auto pp = pp_test(s, v);
    CHECK(pp.statistic < -30.0);
    CHECK(pp.reject_unit_root);
    // Serially uncorrelated errors: the correction is small and PP is close to ADF(0).
    CHECK(pp.statistic == doctest::Approx(adf_test(s, v, 0).statistic).epsilon(0.02));
  }
}

TEST_CASE("unit-root statistics are scale invariant") {
  const auto y = fixture::ar_process(600, {0.8}, 5, 3.0);
  std::vector<double> scaled(y);
  for (double& v : scaled) v *= 1234.5;
  for (auto v : kVariants) {
    const double a = adf_test(TimeSeries(y), v).statistic;
    const double b = adf_test(TimeSeries(scaled), v).statistic;
    CHECK(std::abs(a - b) < 1e-8);
    if (v != Deterministic::none) {
      CHECK(std::abs(pp_test(TimeSeries(y), v).statistic - pp_test(TimeSeries(scaled), v).statistic) < 1e-8);
    }
  }
}

TEST_CASE("unit-root tests reject short input") {
  const TimeSeries s(fixture::white_noise(29, 1));
  CHECK(MSAR_ERROR_CODE(adf_test(s, Deterministic::constant)) == ErrorCode::insufficient_data);
  CHECK(MSAR_ERROR_CODE(pp_test(s, Deterministic::constant)) == ErrorCode::insufficient_data);
  const TimeSeries thirty(fixture::white_noise(30, 1));
  CHECK_FALSE(MSAR_ERROR_CODE(adf_test(thirty, Deterministic::constant, 2)).has_value());
  // Schwert's 12 lags on 30 points leave too few rows.
  CHECK(MSAR_ERROR_CODE(adf_test(thirty, Deterministic::constant_trend, 14)) == ErrorCode::insufficient_data);
  CHECK(MSAR_ERROR_CODE(adf_test(thirty, Deterministic::constant, -1)) == ErrorCode::invalid_argument);
}

TEST_CASE("Durbin-Watson") {
  const std::vector<double> constant{2.5, 2.5, 2.5, 2.5};
  CHECK(durbin_watson(constant) == 0.0);
  const std::vector<double> alternating{1, -1, 1, -1};
  CHECK(durbin_watson(alternating) == doctest::Approx(3.0).epsilon(1e-15));

  const auto e = fixture::white_noise(5000, 21);
  const double dw = durbin_watson(e);
  CHECK(dw >= 1.9);
  CHECK(dw <= 2.1);
  CHECK(dw == doctest::Approx(oracle::durbin_watson(e)).epsilon(1e-13));

  std::vector<double> neg(e), scaled(e);
  for (double& v : neg) v = -v;
  for (double& v : scaled) v *= -37.0;
  CHECK(durbin_watson(neg) == dw);
  CHECK(std::abs(durbin_watson(scaled) - dw) < 1e-12);

  const std::vector<double> zeros(10, 0.0);
  CHECK(MSAR_ERROR_CODE(durbin_watson(zeros)) == ErrorCode::degenerate_variance);
  const std::vector<double> one{1.0};
  CHECK(MSAR_ERROR_CODE(durbin_watson(one)) == ErrorCode::insufficient_data);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = fixture::ar_process(50, {seed % 2 ? 0.95 : -0.95}, seed);
    const double d = durbin_watson(r);
    CHECK(d >= 0.0);
    CHECK(d <= 4.0);
  }
}

TEST_CASE("information criteria") {
  const auto ic = info_criteria(-46233.27, 3, 8760);
  CHECK(std::abs(ic.aic - 92472.54) < 0.02);
  CHECK(std::abs(ic.bic - 92493.78) < 0.02);
  CHECK(std::abs(ic.hqc - 92479.78) < 0.02);

  const auto zero = info_criteria(0.0, 0, 100);
  CHECK(zero.aic == 0.0);
  CHECK(zero.bic == 0.0);
  CHECK(zero.hqc == 0.0);

  const auto a = info_criteria(-500.0, 4, 1000);
  const auto b = info_criteria(-500.0, 5, 1000);
  CHECK(b.aic - a.aic == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(b.bic - a.bic == doctest::Approx(std::log(1000.0)).epsilon(1e-12));
  CHECK(b.hqc > a.hqc);

  // Equal k: every criterion ranks like the log-likelihood.
  const auto better = info_criteria(-400.0, 4, 1000);
  CHECK(better.aic < a.aic);
  CHECK(better.bic < a.bic);
  CHECK(better.hqc < a.hqc);

  CHECK(MSAR_ERROR_CODE(info_criteria(0.0, 1, 2)) == ErrorCode::insufficient_data);
  CHECK(MSAR_ERROR_CODE(info_criteria(0.0, -1, 10)) == ErrorCode::invalid_argument);
}

TEST_CASE("model selection on regime-switching data") {
  const auto sim = simulate_msar(two_regime_generator(), 3000, 17).series;
  const std::vector<int> orders{1, 2, 3, 4};
  const std::vector<ModelFamily> families{ModelFamily::ar, ModelFamily::msar};
  SelectionConfig cfg;
  cfg.em.seed = 5;
  cfg.em.restarts = 4;
  const auto result = select_model(sim, orders, families, cfg);
  REQUIRE(result.rows.size() == 8);
  CHECK(result.msar_fits.size() == 4);
  CHECK(result.rows.front().family == ModelFamily::msar);
  for (std::size_t i = 1; i < result.rows.size(); ++i) CHECK(result.rows[i - 1].aic <= result.rows[i].aic);

  for (const auto& row : result.rows) {
    CAPTURE(row.model_label);
    CHECK_FALSE(row.error.has_value());
    const auto ic = info_criteria(row.loglik, row.k_params, sim.size());
    CHECK(row.aic == ic.aic);
    CHECK(row.bic == ic.bic);
    CHECK(row.hqc == ic.hqc);
    if (row.family == ModelFamily::ar) {
      CHECK(row.k_params == row.ar_order + 2);
      CHECK(row.model_label == "AR(" + std::to_string(row.ar_order) + ")");
    } else {
      CHECK(row.k_params == 2 * row.ar_order + 6);
      CHECK(row.model_label == "MS(2)-AR(" + std::to_string(row.ar_order) + ")");
    }
  }
  // MS(2)-AR(1) beats every AR candidate.
  double ms1 = 0.0, best_ar = std::numeric_limits<double>::infinity();
  for (const auto& row : result.rows) {
    if (row.family == ModelFamily::msar && row.ar_order == 1) ms1 = row.aic;
    if (row.family == ModelFamily::ar) best_ar = std::min(best_ar, row.aic);
  }
  CHECK(ms1 < best_ar);

  const auto again = select_model(sim, orders, families, cfg);
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    CHECK(again.rows[i].model_label == result.rows[i].model_label);
    CHECK(again.rows[i].loglik == result.rows[i].loglik);
  }
}

TEST_CASE("model selection on plain AR data") {
  const TimeSeries s(fixture::ar_process(3000, {0.6}, 23, 1.0));
  const std::vector<int> orders{1, 2, 3, 4};
  const std::vector<ModelFamily> families{ModelFamily::ar, ModelFamily::msar};
  SelectionConfig cfg;
  cfg.em.seed = 1;
  cfg.em.restarts = 3;
  const auto result = select_model(s, orders, families, cfg);
  const CriteriaRow* best_ar = nullptr;
  const CriteriaRow* best_ms = nullptr;
  for (const auto& row : result.rows) {
    if (row.error) continue;
    if (row.family == ModelFamily::ar && !best_ar) best_ar = &row;
    if (row.family == ModelFamily::msar && !best_ms) best_ms = &row;
  }
  REQUIRE(best_ar);
  CHECK(best_ar->ar_order <= 2);
  if (best_ms) {
    // Per-observation gain from switching stays small.
    CHECK((best_ms->loglik - best_ar->loglik) / static_cast<double>(s.size()) < 0.01);
  }
}

TEST_CASE("failed fits are recorded on their row and ranked last") {
  const TimeSeries s(fixture::ar_process(100, {0.5}, 2));
  const std::vector<int> orders{1, 4};
  const std::vector<ModelFamily> families{ModelFamily::msar, ModelFamily::ar};
  SelectionConfig cfg;
  cfg.em.seed = 3;
  const auto result = select_model(s, orders, families, cfg);
  REQUIRE(result.rows.size() == 4);
  // MS(2)-AR(4) has 14 parameters and needs 140 points.
  const auto& last = result.rows.back();
  CHECK(last.model_label == "MS(2)-AR(4)");
  REQUIRE(last.error.has_value());
  CHECK(last.error->find("140") != std::string::npos);
  CHECK(std::isnan(last.aic));
  for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) CHECK_FALSE(result.rows[i].error.has_value());

  const std::vector<int> none;
  CHECK(MSAR_ERROR_CODE(select_model(s, none, families, cfg)) == ErrorCode::invalid_argument);
}

TEST_CASE("selection scores every order on the same observations") {
  const auto y = fixture::ar_process(400, {0.6}, 31);
  const TimeSeries s(y);
  const std::vector<int> orders{1, 3};
  const std::vector<ModelFamily> families{ModelFamily::ar};
  const auto result = select_model(s, orders, families, SelectionConfig{});
  for (const auto& row : result.rows) {
    // AR(1) drops two leading points so both rows explain y_3..y_399.
    const std::vector<double> tail(y.begin() + (3 - row.ar_order), y.end());
    const auto o = oracle::ar_normal_equations(tail, row.ar_order);
    const double var = o.residuals.squaredNorm() / static_cast<double>(o.residuals.size());
    std::vector<double> coef(o.beta.data() + 1, o.beta.data() + o.beta.size());
    CHECK(row.loglik == doctest::Approx(oracle::ar_loglik(tail, o.beta(0), coef, var)).epsilon(1e-10));
  }
}
