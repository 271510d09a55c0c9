// msar: command-line front end for the MS-AR library.
//
// Exit codes: 0 success, 1 data or usage error, 2 estimation failure.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "msar/ar.hpp"
#include "msar/diagnostics.hpp"
#include "msar/em.hpp"
#include "msar/error.hpp"
#include "msar/io.hpp"
#include "msar/regime_switching.hpp"
#include "msar/series_core.hpp"

namespace fs = std::filesystem;
using namespace msar;

namespace {

struct InputOptions {
  std::string path;
  std::string timestamp_column = "timestamp";
  std::string value_column = "load_mw";
  char delimiter = ',';
  MissingPolicy missing = MissingPolicy::error;
  bool allow_nonpositive = false;
};

struct SeasonOptions {
  bool enabled = false;
  int period = 24;
};

struct EstimationOptions {
  int k = 2;
  int p = 1;
  std::uint64_t seed = 0;
  int restarts = 8;
  int threads = 0;
  bool shared_variance = false;
};

void add_input(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("input", in.path, "Input CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--timestamp-column", in.timestamp_column, "Timestamp column name")->capture_default_str();
  cmd->add_option("--value-column", in.value_column, "Value column name")->capture_default_str();
  cmd->add_option("--delimiter", in.delimiter, "Field delimiter")->capture_default_str();
  const std::map<std::string, MissingPolicy> policies{{"error", MissingPolicy::error},
                                                      {"interpolate", MissingPolicy::interpolate},
                                                      {"drop", MissingPolicy::drop_leading_trailing}};
  cmd->add_option("--missing", in.missing, "Missing-value policy: error | interpolate | drop")
      ->transform(CLI::CheckedTransformer(policies, CLI::ignore_case).description(""))
      ->option_text("error|interpolate|drop [error]");
  cmd->add_flag("--allow-nonpositive", in.allow_nonpositive, "Accept zero or negative values");
}

void add_season(CLI::App* cmd, SeasonOptions& s, bool default_on) {
  s.enabled = default_on;
  if (!default_on) cmd->add_flag("--deseasonalize", s.enabled, "Remove the periodic profile first");
  cmd->add_option("--period", s.period, "Seasonal period in steps")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_estimation(CLI::App* cmd, EstimationOptions& e, bool with_order) {
  cmd->add_option("--k", e.k, "Number of regimes")->capture_default_str()->check(CLI::Range(1, 8));
  if (with_order) cmd->add_option("--p", e.p, "AR order")->capture_default_str()->check(CLI::Range(1, 24));
  cmd->add_option("--seed", e.seed, "Seed for restart perturbations")->required();
  cmd->add_option("--restarts", e.restarts, "EM restarts")->capture_default_str()->check(CLI::Range(1, 1000));
  cmd->add_option("--threads", e.threads, "Worker threads (0 = all cores); results do not depend on it")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--shared-variance", e.shared_variance, "One variance for all regimes");
}

EmConfig em_config(const EstimationOptions& e) {
  EmConfig c;
  c.seed = e.seed;
  c.restarts = e.restarts;
  c.threads = e.threads > 0 ? e.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return c;
}

MsArSpec msar_spec(const EstimationOptions& e) {
  return {e.k, e.p, e.shared_variance ? VarianceMode::shared : VarianceMode::per_regime};
}

LoadedSeries load(const InputOptions& in) {
  LoadOptions o;
  o.timestamp_column = in.timestamp_column;
  o.value_column = in.value_column;
  o.delimiter = in.delimiter;
  o.missing = in.missing;
  o.require_positive = !in.allow_nonpositive;
  auto loaded = load_csv(in.path, o);
  spdlog::info("loaded {} rows from {} ({} interpolated, {} dropped)", loaded.series.size(), in.path,
               loaded.interpolated.size(), loaded.dropped);
  return loaded;
}

TimeSeries maybe_deseasonalize(const TimeSeries& series, const SeasonOptions& s) {
  if (!s.enabled) return series;
  spdlog::info("removing period-{} profile", s.period);
  return deseasonalize(series, seasonal_profile(series, s.period));
}

InputDigest digest(const InputOptions& in, const LoadedSeries& loaded) {
  return {in.path, loaded.series.size(), format_timestamp(loaded.series.start()),
          format_timestamp(loaded.series.end()), loaded.interpolated.size()};
}

std::vector<UnitRootResult> unit_root_battery(const TimeSeries& series, const std::string& which) {
  std::vector<UnitRootResult> out;
  if (which != "pp") {
    for (auto v : {Deterministic::none, Deterministic::constant, Deterministic::constant_trend}) {
      out.push_back(adf_test(series, v));
    }
  }
  if (which != "adf") {
    for (auto v : {Deterministic::constant, Deterministic::constant_trend}) out.push_back(pp_test(series, v));
  }
  return out;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "n/a"; }

// Fits the chosen MS model's probabilities and the report pieces derived
// from them, writing the probability CSV under out_dir.
void attach_fit(FitReport& report, const MsArFit& fit, const TimeSeries& series, const fs::path& out_dir) {
  auto filtered = hamilton_filter(fit, series);
  auto path = kim_smoother(fit, filtered.path);
  const auto residuals = msar_residuals(fit, series, path, ResidualKind::one_step);
  report.chosen_fit = fit;
  // Selection fits carry the common-sample log-likelihood; report the full one.
  report.chosen_fit->loglik = filtered.loglik;
  report.durbin_watson = durbin_watson(residuals);
  if (!out_dir.empty()) {
    const fs::path file = out_dir / "probabilities.csv";
    export_probabilities(file, path, series);
    report.probability_files.push_back(file.filename().string());
  }
}

void write_reports(const FitReport& report, const fs::path& out_dir) {
  write_report(report, ReportFormat::json, out_dir / "report.json");
  write_report(report, ReportFormat::text, out_dir / "report.txt");
  spdlog::info("wrote {}", (out_dir / "report.json").string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

spdlog::level::level_enum parse_level(const std::string& name) {
  static const std::map<std::string, spdlog::level::level_enum> levels{
      {"error", spdlog::level::err}, {"warn", spdlog::level::warn},
      {"info", spdlog::level::info}, {"debug", spdlog::level::debug}};
  const auto it = levels.find(name);
  if (it == levels.end()) throw Error(ErrorCode::invalid_argument, "unknown log level '" + name + "'");
  return it->second;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("msar");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Markov-switching autoregressive models for hourly series"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level;
  app.add_option("--log-level", log_level, "error | warn | info | debug (overrides RS_LOG)");

  // describe
  InputOptions describe_in;
  int describe_lags = 48;
  auto* describe_cmd = app.add_subcommand("describe", "Summary statistics, ACF and PACF");
  add_input(describe_cmd, describe_in);
  describe_cmd->add_option("--lags", describe_lags, "Correlogram lags")->capture_default_str()->check(CLI::PositiveNumber);

  // test-stationarity
  InputOptions ur_in;
  SeasonOptions ur_season;
  std::string ur_which = "both";
  auto* ur_cmd = app.add_subcommand("test-stationarity", "ADF and PP unit-root tests");
  add_input(ur_cmd, ur_in);
  add_season(ur_cmd, ur_season, false);
  ur_cmd->add_option("--test", ur_which, "adf | pp | both")->capture_default_str()->check(CLI::IsMember({"adf", "pp", "both"}));

  // deseasonalize
  InputOptions ds_in;
  SeasonOptions ds_season;
  std::string ds_out;
  auto* ds_cmd = app.add_subcommand("deseasonalize", "Remove the periodic mean profile");
  add_input(ds_cmd, ds_in);
  add_season(ds_cmd, ds_season, true);
  ds_cmd->add_option("-o,--output", ds_out, "Output CSV")->required();

  // fit-ar
  InputOptions ar_in;
  SeasonOptions ar_season;
  int ar_p = 1;
  auto* ar_cmd = app.add_subcommand("fit-ar", "Conditional least-squares AR(p)");
  add_input(ar_cmd, ar_in);
  add_season(ar_cmd, ar_season, false);
  ar_cmd->add_option("--p", ar_p, "AR order")->capture_default_str()->check(CLI::Range(1, 200));

  // fit-msar
  InputOptions ms_in;
  SeasonOptions ms_season;
  EstimationOptions ms_est;
  std::string ms_out;
  auto* ms_cmd = app.add_subcommand("fit-msar", "EM estimation of MS(K)-AR(p)");
  add_input(ms_cmd, ms_in);
  add_season(ms_cmd, ms_season, false);
  add_estimation(ms_cmd, ms_est, true);
  ms_cmd->add_option("--out", ms_out, "Directory for report.json, report.txt and probabilities.csv");

  // select
  InputOptions sel_in;
  SeasonOptions sel_season;
  EstimationOptions sel_est;
  int sel_max_order = 4;
  std::vector<std::string> sel_families{"ar", "msar"};
  auto* sel_cmd = app.add_subcommand("select", "Rank AR and MS-AR orders by information criteria");
  add_input(sel_cmd, sel_in);
  add_season(sel_cmd, sel_season, false);
  add_estimation(sel_cmd, sel_est, false);
  sel_cmd->add_option("--max-order", sel_max_order, "Largest AR order")->capture_default_str()->check(CLI::Range(1, 24));
  sel_cmd->add_option("--families", sel_families, "Model families: ar, msar")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::IsMember({"ar", "msar"}));

  // simulate
  EstimationOptions sim_est;
  std::size_t sim_n = 1000;
  std::size_t sim_burn = 0;
  std::string sim_out, sim_start = "1970-01-01T00:00:00Z";
  std::vector<double> sim_means, sim_ar, sim_vars;
  double sim_stay = 0.9, sim_level = 0.0, sim_amplitude = 0.0;
  bool sim_regimes = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate an MS(K)-AR(p) path");
  sim_cmd->add_option("--k", sim_est.k, "Number of regimes")->capture_default_str()->check(CLI::Range(1, 8));
  sim_cmd->add_option("--p", sim_est.p, "AR order")->capture_default_str()->check(CLI::Range(1, 24));
  sim_cmd->add_option("--n", sim_n, "Length")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim_est.seed, "RNG seed")->required();
  sim_cmd->add_option("--burn-in", sim_burn, "Discarded leading steps")->capture_default_str();
  sim_cmd->add_option("--means", sim_means, "Regime means, comma separated (default 0, 10, 20, ...)")->delimiter(',');
  sim_cmd->add_option("--ar", sim_ar, "AR coefficients shared by all regimes (default 0.5, 0, ...)")->delimiter(',');
  sim_cmd->add_option("--variances", sim_vars, "Regime variances (default 1)")->delimiter(',');
  sim_cmd->add_option("--stay", sim_stay, "Diagonal of the transition matrix")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--level", sim_level, "Constant added to every value")->capture_default_str();
  sim_cmd->add_option("--daily-amplitude", sim_amplitude, "Amplitude of an added 24-step sinusoid")->capture_default_str();
  sim_cmd->add_option("--start", sim_start, "Timestamp of the first value")->capture_default_str();
  sim_cmd->add_flag("--with-regimes", sim_regimes, "Append the simulated regime column");
  sim_cmd->add_option("-o,--output", sim_out, "Output CSV")->required();

  // pipeline
  InputOptions pl_in;
  SeasonOptions pl_season;
  EstimationOptions pl_est;
  int pl_max_order = 4;
  std::string pl_out;
  auto* pl_cmd = app.add_subcommand("pipeline", "describe, test, deseasonalize, select, fit and report");
  add_input(pl_cmd, pl_in);
  add_season(pl_cmd, pl_season, true);
  add_estimation(pl_cmd, pl_est, false);
  pl_cmd->add_option("--max-order", pl_max_order, "Largest AR order")->capture_default_str()->check(CLI::Range(1, 24));
  pl_cmd->add_option("--out", pl_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!log_level.empty()) {
      spdlog::set_level(parse_level(log_level));
    } else if (const char* env = std::getenv("RS_LOG"); env && *env) {
      spdlog::set_level(parse_level(env));
    }

    if (*describe_cmd) {
      const auto loaded = load(describe_in);
      const auto& y = loaded.series;
      const auto s = describe(y);
      fmt::print("rows {}  {} .. {}\n", s.count, format_timestamp(y.start()), format_timestamp(y.end()));
      fmt::print("min {:.4f}  max {:.4f}  mean {:.4f}  sd {:.4f}  skewness {}  excess kurtosis {}\n", s.min, s.max,
                 s.mean, s.std_dev, fmt_opt(s.skewness), fmt_opt(s.excess_kurtosis));
      const int lags = std::min<int>(describe_lags, static_cast<int>(y.size() / 2) - 1);
      if (lags >= 1 && s.std_dev > 0.0) {
        const auto a = acf(y, lags);
        const auto pa = pacf(y, lags);
        fmt::print("{:>5} {:>10} {:>10}   (95% bound {:.4f})\n", "lag", "acf", "pacf", a.confidence_bound);
        for (int l = 1; l <= lags; ++l) fmt::print("{:>5} {:>10.4f} {:>10.4f}\n", l, a.at(l), pa.at(l));
      }
    } else if (*ur_cmd) {
      const auto loaded = load(ur_in);
      const auto y = maybe_deseasonalize(loaded.series, ur_season);
      fmt::print("{:<4} {:<15} {:>12} {:>12} {:>6}  {}\n", "test", "variant", "statistic", "5% crit", "lag", "decision");
      for (const auto& r : unit_root_battery(y, ur_which)) {
        fmt::print("{:<4} {:<15} {:>12.4f} {:>12.6g} {:>6}  {}\n", to_string(r.test), to_string(r.variant), r.statistic,
                   r.critical_value_5pct, r.lag_or_bandwidth, r.reject_unit_root ? "reject unit root" : "fail to reject");
      }
    } else if (*ds_cmd) {
      const auto loaded = load(ds_in);
      const auto profile = seasonal_profile(loaded.series, ds_season.period);
      write_series_csv(ds_out, deseasonalize(loaded.series, profile), ds_in.value_column);
      fmt::print("position offset\n");
      for (int i = 0; i < profile.period; ++i) fmt::print("{:>8} {:.6g}\n", i, profile.offsets[static_cast<std::size_t>(i)]);
    } else if (*ar_cmd) {
      const auto loaded = load(ar_in);
      const auto y = maybe_deseasonalize(loaded.series, ar_season);
      const auto fit = fit_ar(y, ar_p);
      const auto ic = info_criteria(fit.loglik, ar_p + 2, y.size());
      fmt::print("AR({})  intercept {:.6g}  variance {:.6g}  loglik {:.4f}\n", ar_p, fit.intercept, fit.variance, fit.loglik);
      for (int i = 0; i < ar_p; ++i) fmt::print("  beta_{} {:.6g}\n", i + 1, fit.coefficients[static_cast<std::size_t>(i)]);
      fmt::print("AIC {:.2f}  BIC {:.2f}  HQC {:.2f}  stationary {}\n", ic.aic, ic.bic, ic.hqc,
                 is_stationary(fit.coefficients) ? "yes" : "no");
    } else if (*ms_cmd) {
      const auto loaded = load(ms_in);
      const auto y = maybe_deseasonalize(loaded.series, ms_season);
      const auto fit = em_fit(y, msar_spec(ms_est), em_config(ms_est));
      FitReport report;
      report.input = digest(ms_in, loaded);
      report.summary = describe(y);
      report.seasonal_period = ms_season.enabled ? ms_season.period : 0;
      report.provenance = {ms_est.seed, library_version(),
                           fmt::format("fit-msar --k {} --p {}", ms_est.k, ms_est.p)};
      if (!ms_out.empty()) ensure_dir(ms_out);
      attach_fit(report, fit, y, ms_out);
      if (!ms_out.empty()) write_reports(report, ms_out);
      std::cout << render_text(report);
    } else if (*sel_cmd) {
      const auto loaded = load(sel_in);
      const auto y = maybe_deseasonalize(loaded.series, sel_season);
      std::vector<int> orders;
      for (int p = 1; p <= sel_max_order; ++p) orders.push_back(p);
      std::vector<ModelFamily> families;
      const auto wants = [&](const char* f) { return std::ranges::find(sel_families, f) != sel_families.end(); };
      if (wants("ar")) families.push_back(ModelFamily::ar);
      if (wants("msar")) families.push_back(ModelFamily::msar);
      SelectionConfig cfg{sel_est.k, sel_est.shared_variance ? VarianceMode::shared : VarianceMode::per_regime,
                          em_config(sel_est)};
      const auto result = select_model(y, orders, families, cfg);
      fmt::print("{:<14} {:>4} {:>14} {:>14} {:>14} {:>14}\n", "model", "k", "AIC", "BIC", "HQC", "loglik");
      for (const auto& r : result.rows) {
        if (r.error) {
          fmt::print("{:<14} {:>4} failed: {}\n", r.model_label, r.k_params, *r.error);
        } else {
          fmt::print("{:<14} {:>4} {:>14.2f} {:>14.2f} {:>14.2f} {:>14.2f}\n", r.model_label, r.k_params, r.aic, r.bic,
                     r.hqc, r.loglik);
        }
      }
    } else if (*sim_cmd) {
      const int k = sim_est.k;
      const int p = sim_est.p;
      MsArFit params;
      params.spec = {k, p, VarianceMode::per_regime};
      params.means.resize(k);
      if (sim_means.empty()) {
        for (int j = 0; j < k; ++j) params.means(j) = 10.0 * j;
      } else {
        const auto& m = sim_means;
        if (m.size() != static_cast<std::size_t>(k)) throw Error(ErrorCode::invalid_argument, "--means needs K values");
        for (int j = 0; j < k; ++j) params.means(j) = m[static_cast<std::size_t>(j)];
      }
      params.ar = Eigen::MatrixXd::Zero(k, p);
      if (sim_ar.empty()) {
        params.ar.col(0).setConstant(0.5);
      } else {
        const auto& b = sim_ar;
        if (b.size() != static_cast<std::size_t>(p)) throw Error(ErrorCode::invalid_argument, "--ar needs p values");
        for (int i = 0; i < p; ++i) params.ar.col(i).setConstant(b[static_cast<std::size_t>(i)]);
      }
      params.variances = Eigen::VectorXd::Ones(k);
      if (!sim_vars.empty()) {
        const auto& v = sim_vars;
        if (v.size() != static_cast<std::size_t>(k)) throw Error(ErrorCode::invalid_argument, "--variances needs K values");
        for (int j = 0; j < k; ++j) params.variances(j) = v[static_cast<std::size_t>(j)];
      }
      params.transition = TransitionMatrix::with_diagonal(k, sim_stay);
      params.initial = k == 1 ? Eigen::VectorXd::Ones(1) : ergodic_distribution(params.transition);
      const auto sim = simulate_msar(params, sim_n, sim_est.seed, sim_burn, parse_timestamp(sim_start));
      std::vector<double> values(sim.series.values().begin(), sim.series.values().end());
      if (sim_level != 0.0 || sim_amplitude != 0.0) {
        // Hour of day of the first value, so the cycle follows the clock.
        const auto secs = sim.series.start().time_since_epoch().count();
        const auto first_hour = ((secs / 3600) % 24 + 24) % 24;
        for (std::size_t t = 0; t < values.size(); ++t) {
          const double hour = static_cast<double>((static_cast<std::size_t>(first_hour) + t) % 24);
          values[t] += sim_level + sim_amplitude * std::sin(2.0 * std::numbers::pi * hour / 24.0);
        }
      }
      write_series_csv(sim_out, sim.series.with_values(std::move(values)), "load_mw",
                       sim_regimes ? &sim.regimes : nullptr);
      spdlog::info("wrote {} rows to {}", sim_n, sim_out);
    } else if (*pl_cmd) {
      const auto loaded = load(pl_in);
      const auto& raw = loaded.series;
      FitReport report;
      report.input = digest(pl_in, loaded);
      report.summary = describe(raw);
      report.seasonal_period = pl_season.period;
      report.provenance = {pl_est.seed, library_version(),
                           fmt::format("pipeline --k {} --max-order {} --period {} --restarts {}{}", pl_est.k,
                                       pl_max_order, pl_season.period, pl_est.restarts,
                                       pl_est.shared_variance ? " --shared-variance" : "")};
      const auto y = deseasonalize(raw, seasonal_profile(raw, pl_season.period));
      spdlog::info("unit-root tests");
      report.stationarity = unit_root_battery(y, "both");

      std::vector<int> orders;
      for (int p = 1; p <= pl_max_order; ++p) orders.push_back(p);
      const std::vector<ModelFamily> families{ModelFamily::ar, ModelFamily::msar};
      SelectionConfig cfg{pl_est.k, pl_est.shared_variance ? VarianceMode::shared : VarianceMode::per_regime,
                          em_config(pl_est)};
      spdlog::info("model selection over orders 1..{}", pl_max_order);
      auto selection = select_model(y, orders, families, cfg);
      report.selection = selection.rows;

      // Best MS-AR row by AIC; rows are already ranked.
      const auto chosen = std::find_if(selection.rows.begin(), selection.rows.end(), [](const CriteriaRow& r) {
        return r.family == ModelFamily::msar && !r.error;
      });
      ensure_dir(pl_out);
      if (chosen == selection.rows.end()) {
        write_reports(report, pl_out);
        throw Error(ErrorCode::estimation_failure, "no MS-AR order could be estimated");
      }
      const auto fit = std::find_if(selection.msar_fits.begin(), selection.msar_fits.end(),
                                    [&](const MsArFit& f) { return f.spec.ar_order == chosen->ar_order; });
      spdlog::info("chosen {}", chosen->model_label);
      attach_fit(report, *fit, y, pl_out);
      write_reports(report, pl_out);
      std::cout << render_text(report);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return is_estimation_failure(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
