#include "msar/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "msar/error.hpp"

#ifndef MSAR_VERSION
#define MSAR_VERSION "0.0.0"
#endif

namespace msar {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(std::string_view line, char delimiter) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  for (auto& f : fields) f = std::string(trim(f));
  return fields;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what, ErrorCode code = ErrorCode::parse) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <class Vec>
ordered_json vector_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
      throw Error(ErrorCode::parse, "ragged matrix in report");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Deterministic deterministic_from(const std::string& s) {
  if (s == "none") return Deterministic::none;
  if (s == "constant") return Deterministic::constant;
  if (s == "constant_trend") return Deterministic::constant_trend;
  throw Error(ErrorCode::parse, "unknown unit-root variant '" + s + "'");
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::io, "write to " + path.string() + " failed");
}

}  // namespace

std::string library_version() { return MSAR_VERSION; }

LoadedSeries load_csv(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::size_t ts_col = 0, value_col = 0;
  {
    if (!std::getline(in, line)) throw Error(ErrorCode::parse, path.string() + ": missing header row");
    ++line_no;
    if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    const auto header = split_record(line, options.delimiter);
    auto find = [&](const std::string& name) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
      }
      fail_at(1, "header has no column '" + name + "'");
    };
    ts_col = find(options.timestamp_column);
    value_col = find(options.value_column);
  }

  const auto step = options.step.count();
  std::vector<std::optional<double>> slots;
  std::vector<std::size_t> slot_line;  // 0 for hours absent from the file
  Timestamp first{};
  Timestamp last{};
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_record(line, options.delimiter);
    if (fields.size() <= std::max(ts_col, value_col)) fail_at(line_no, "expected at least " + std::to_string(std::max(ts_col, value_col) + 1) + " fields");

    Timestamp ts;
    try {
      ts = parse_timestamp(fields[ts_col]);
    } catch (const Error& e) {
      fail_at(line_no, e.what());
    }

    std::optional<double> value;
    const std::string_view raw = fields[value_col];
    if (!is_missing_token(raw)) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc{} || ptr != raw.data() + raw.size() || !std::isfinite(v)) {
        fail_at(line_no, "unparseable value '" + std::string(raw) + "'");
      }
      if (options.require_positive && v <= 0.0) {
        fail_at(line_no, "load must be positive, got " + std::string(raw), ErrorCode::invalid_argument);
      }
      value = v;
    }

    if (slots.empty()) {
      first = ts;
    } else {
      const auto delta = (ts - last).count();
      if (delta == 0) fail_at(line_no, "duplicate timestamp " + format_timestamp(ts));
      if (delta < 0) fail_at(line_no, "timestamp " + format_timestamp(ts) + " is earlier than the previous row");
      if (delta % step != 0) fail_at(line_no, "timestamp " + format_timestamp(ts) + " is off the " + std::to_string(step) + "s grid");
      for (auto gap = delta / step - 1; gap > 0; --gap) {
        slots.emplace_back();
        slot_line.push_back(0);
      }
    }
    slots.push_back(value);
    slot_line.push_back(line_no);
    last = ts;
  }
  if (slots.empty()) throw Error(ErrorCode::insufficient_data, path.string() + ": no data rows");

  // Locate runs of missing slots.
  auto describe_slot = [&](std::size_t i) {
    const auto ts = format_timestamp(first + options.step * static_cast<long long>(i));
    return slot_line[i] ? "line " + std::to_string(slot_line[i]) + " (" + ts + ")" : "missing hour " + ts;
  };
  std::size_t begin = 0, end = slots.size();
  LoadedSeries out{TimeSeries({0.0}), {}, 0};
  if (options.missing == MissingPolicy::drop_leading_trailing) {
    while (begin < end && !slots[begin]) ++begin;
    while (end > begin && !slots[end - 1]) --end;
    out.dropped = begin + (slots.size() - end);
    if (begin == end) throw Error(ErrorCode::insufficient_data, path.string() + ": every value is missing");
  }
  std::vector<double> values;
  values.reserve(end - begin);
  for (std::size_t i = begin; i < end;) {
    if (slots[i]) {
      values.push_back(*slots[i]);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < end && !slots[j]) ++j;
    const std::size_t run = j - i;
    if (options.missing != MissingPolicy::interpolate) {
      throw Error(ErrorCode::parse, "missing value at " + describe_slot(i) + " (missing policy forbids gaps)");
    }
    if (i == begin || j == end) {
      throw Error(ErrorCode::parse, "cannot interpolate missing value at the series edge: " + describe_slot(i));
    }
    if (run > options.max_interpolated_run) {
      throw Error(ErrorCode::parse, "gap of " + std::to_string(run) + " steps starting at " + describe_slot(i) +
                                        " exceeds the interpolation limit of " +
                                        std::to_string(options.max_interpolated_run));
    }
    const double lo = *slots[i - 1];
    const double hi = *slots[j];
    for (std::size_t m = 1; m <= run; ++m) {
      out.interpolated.push_back(values.size());
      values.push_back(lo + (hi - lo) * static_cast<double>(m) / static_cast<double>(run + 1));
    }
    i = j;
  }
  out.series = TimeSeries(std::move(values), first + options.step * static_cast<long long>(begin), options.step);
  return out;
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& series,
                      const std::string& value_column, const RegimePath* regimes) {
  if (regimes && regimes->labels.size() != series.size()) {
    throw Error(ErrorCode::invalid_argument, "regime path length differs from the series");
  }
  auto out = open_for_write(path);
  out << "timestamp," << value_column << (regimes ? ",regime" : "") << '\n';
  char buf[64];
  for (std::size_t t = 0; t < series.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.17g", series[t]);
    out << format_timestamp(series.timestamp(t)) << ',' << buf;
    if (regimes) out << ',' << regimes->labels[t];
    out << '\n';
  }
  finish_write(out, path);
}

void export_probabilities(const std::filesystem::path& destination, const ProbabilityPath& path,
                          const TimeSeries& series) {
  if (!path.has_smoothed()) throw Error(ErrorCode::invalid_argument, "smoothed probabilities are required");
  if (path.length() != series.size()) {
    throw Error(ErrorCode::invalid_argument, "probability path has " + std::to_string(path.length()) +
                                                 " rows but the series has " + std::to_string(series.size()));
  }
  const auto labels = classify_regimes(path, ProbabilitySource::smoothed);
  const int k = path.n_regimes;
  auto out = open_for_write(destination);
  out << "timestamp";
  for (int j = 1; j <= k; ++j) out << ",regime_" << j << "_filtered";
  for (int j = 1; j <= k; ++j) out << ",regime_" << j << "_smoothed";
  out << ",map_regime\n";
  char buf[32];
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << format_timestamp(series.timestamp(t));
    const auto row = static_cast<Eigen::Index>(t);
    for (int j = 0; j < k; ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", path.filtered_marginal(row, j));
      out << ',' << buf;
    }
    for (int j = 0; j < k; ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", path.smoothed_marginal(row, j));
      out << ',' << buf;
    }
    out << ',' << labels.labels[t] << '\n';
  }
  finish_write(out, destination);
}

nlohmann::ordered_json to_json(const MsArFit& fit) {
  ordered_json j;
  j["model"] = model_label(ModelFamily::msar, fit.spec.n_regimes, fit.spec.ar_order);
  j["n_regimes"] = fit.spec.n_regimes;
  j["ar_order"] = fit.spec.ar_order;
  j["variance_mode"] = fit.spec.variance_mode == VarianceMode::shared ? "shared" : "per_regime";
  j["free_parameters"] = fit.spec.free_parameters();
  j["regime_means"] = vector_json(fit.means);
  j["ar_coefficients"] = matrix_json(fit.ar);
  j["variances"] = vector_json(fit.variances);
  j["transition_matrix"] = matrix_json(fit.transition.matrix());
  j["initial_distribution"] = vector_json(fit.initial);
  j["loglik"] = number_or_null(fit.loglik);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  try {
    j["expected_durations"] = vector_json(expected_duration(fit.transition));
  } catch (const Error&) {
    j["expected_durations"] = nullptr;
  }
  ordered_json trans = ordered_json::array();
  for (const auto& d : transitional_durations(fit.transition)) {
    trans.push_back({{"from", d.from + 1}, {"to", d.to + 1}, {"steps", number_or_null(d.steps)}});
  }
  j["transitional_durations"] = std::move(trans);
  try {
    j["ergodic_distribution"] = vector_json(ergodic_distribution(fit.transition));
  } catch (const Error&) {
    j["ergodic_distribution"] = nullptr;
  }
  return j;
}

MsArFit fit_from_json(const nlohmann::json& j) {
  try {
    MsArFit fit;
    fit.spec.n_regimes = j.at("n_regimes").get<int>();
    fit.spec.ar_order = j.at("ar_order").get<int>();
    fit.spec.variance_mode = j.at("variance_mode").get<std::string>() == "shared" ? VarianceMode::shared
                                                                                 : VarianceMode::per_regime;
    fit.means = vector_from(j.at("regime_means"));
    fit.ar = matrix_from(j.at("ar_coefficients"));
    fit.variances = vector_from(j.at("variances"));
    fit.transition = TransitionMatrix(matrix_from(j.at("transition_matrix")));
    fit.initial = vector_from(j.at("initial_distribution"));
    fit.loglik = number_from(j.at("loglik"));
    fit.iterations = j.value("iterations", 0);
    fit.converged = j.value("converged", false);
    validate(fit, /*allow_zero_variance=*/true);
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed MS-AR parameters: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const FitReport& report) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["provenance"] = {{"library_version", report.provenance.library_version},
                     {"seed", report.provenance.seed},
                     {"command", report.provenance.command}};
  j["input"] = {{"path", report.input.path},
                {"rows", report.input.rows},
                {"first_timestamp", report.input.first_timestamp},
                {"last_timestamp", report.input.last_timestamp},
                {"interpolated", report.input.interpolated}};
  const auto& s = report.summary;
  j["summary"] = {{"count", s.count},
                  {"min", s.min},
                  {"max", s.max},
                  {"mean", s.mean},
                  {"std_dev", s.std_dev},
                  {"skewness", s.skewness ? ordered_json(*s.skewness) : ordered_json(nullptr)},
                  {"excess_kurtosis", s.excess_kurtosis ? ordered_json(*s.excess_kurtosis) : ordered_json(nullptr)}};
  j["seasonal_period"] = report.seasonal_period;
  ordered_json tests = ordered_json::array();
  for (const auto& r : report.stationarity) {
    tests.push_back({{"test", to_string(r.test)},
                     {"variant", to_string(r.variant)},
                     {"statistic", number_or_null(r.statistic)},
                     {"critical_value_5pct", r.critical_value_5pct},
                     {"lag_or_bandwidth", r.lag_or_bandwidth},
                     {"reject_unit_root", r.reject_unit_root}});
  }
  j["stationarity"] = std::move(tests);
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.selection) {
    rows.push_back({{"model", r.model_label},
                    {"family", r.family == ModelFamily::ar ? "ar" : "msar"},
                    {"ar_order", r.ar_order},
                    {"k_params", r.k_params},
                    {"loglik", number_or_null(r.loglik)},
                    {"aic", number_or_null(r.aic)},
                    {"bic", number_or_null(r.bic)},
                    {"hqc", number_or_null(r.hqc)},
                    {"error", r.error ? ordered_json(*r.error) : ordered_json(nullptr)}});
  }
  j["selection"] = {
      {"ranked_by", "aic"},
      {"parameter_count",
       "AR(p): p + 2; MS(K)-AR(p): K*p + K + K (or 1 if shared variance) + K*(K-1)"},
      {"rows", std::move(rows)}};
  j["chosen_fit"] = report.chosen_fit ? to_json(*report.chosen_fit) : ordered_json(nullptr);
  j["diagnostics"] = {{"durbin_watson", report.durbin_watson ? number_or_null(*report.durbin_watson)
                                                             : ordered_json(nullptr)},
                      {"residuals", "one-step-ahead prediction errors"}};
  j["probability_files"] = report.probability_files;
  return j;
}

FitReport report_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kReportSchemaVersion) {
      throw Error(ErrorCode::parse, "unsupported report schema_version " + std::to_string(version));
    }
    FitReport r;
    const auto& prov = j.at("provenance");
    r.provenance.library_version = prov.at("library_version").get<std::string>();
    r.provenance.seed = prov.at("seed").get<std::uint64_t>();
    r.provenance.command = prov.at("command").get<std::string>();
    const auto& in = j.at("input");
    r.input.path = in.at("path").get<std::string>();
    r.input.rows = in.at("rows").get<std::size_t>();
    r.input.first_timestamp = in.at("first_timestamp").get<std::string>();
    r.input.last_timestamp = in.at("last_timestamp").get<std::string>();
    r.input.interpolated = in.at("interpolated").get<std::size_t>();
    const auto& s = j.at("summary");
    r.summary.count = s.at("count").get<std::size_t>();
    r.summary.min = s.at("min").get<double>();
    r.summary.max = s.at("max").get<double>();
    r.summary.mean = s.at("mean").get<double>();
    r.summary.std_dev = s.at("std_dev").get<double>();
    if (!s.at("skewness").is_null()) r.summary.skewness = s.at("skewness").get<double>();
    if (!s.at("excess_kurtosis").is_null()) r.summary.excess_kurtosis = s.at("excess_kurtosis").get<double>();
    r.seasonal_period = j.at("seasonal_period").get<int>();
    for (const auto& t : j.at("stationarity")) {
      UnitRootResult u;
      u.test = t.at("test").get<std::string>() == "PP" ? UnitRootTest::pp : UnitRootTest::adf;
      u.variant = deterministic_from(t.at("variant").get<std::string>());
      u.statistic = number_from(t.at("statistic"));
      u.critical_value_5pct = t.at("critical_value_5pct").get<double>();
      u.lag_or_bandwidth = t.at("lag_or_bandwidth").get<int>();
      u.reject_unit_root = t.at("reject_unit_root").get<bool>();
      r.stationarity.push_back(u);
    }
    for (const auto& row : j.at("selection").at("rows")) {
      CriteriaRow c;
      c.model_label = row.at("model").get<std::string>();
      c.family = row.at("family").get<std::string>() == "ar" ? ModelFamily::ar : ModelFamily::msar;
      c.ar_order = row.at("ar_order").get<int>();
      c.k_params = row.at("k_params").get<int>();
      c.loglik = number_from(row.at("loglik"));
      c.aic = number_from(row.at("aic"));
      c.bic = number_from(row.at("bic"));
      c.hqc = number_from(row.at("hqc"));
      if (!row.at("error").is_null()) c.error = row.at("error").get<std::string>();
      r.selection.push_back(std::move(c));
    }
    if (!j.at("chosen_fit").is_null()) r.chosen_fit = fit_from_json(j.at("chosen_fit"));
    const auto& dw = j.at("diagnostics").at("durbin_watson");
    if (!dw.is_null()) r.durbin_watson = dw.get<double>();
    r.probability_files = j.at("probability_files").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed report: ") + e.what());
  }
}

std::string render_text(const FitReport& report) {
  std::string out;
  auto line = [&out](const std::string& s = {}) {
    out += s;
    out += '\n';
  };
  auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); };

  line(fmt::format("MS-AR fit report (schema {}, library {})", kReportSchemaVersion,
                   report.provenance.library_version));
  line(fmt::format("command: {}  seed: {}", report.provenance.command, report.provenance.seed));
  line(fmt::format("input: {}  rows: {}  period: {} .. {}  interpolated: {}", report.input.path,
                   report.input.rows, report.input.first_timestamp, report.input.last_timestamp,
                   report.input.interpolated));
  line();
  line("Descriptive statistics");
  line(fmt::format("  {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}", "Minimum", "Maximum", "Mean",
                   "Std. Dev.", "Skewness", "Kurtosis"));
  const auto& s = report.summary;
  line(fmt::format("  {:>12.4f} {:>12.4f} {:>12.4f} {:>12.4f} {:>10} {:>10}", s.min, s.max, s.mean,
                   s.std_dev, opt(s.skewness), opt(s.excess_kurtosis)));
  line("  (kurtosis is excess kurtosis)");
  line();
  line(fmt::format("Seasonal period: {} steps", report.seasonal_period));
  line();
  if (!report.stationarity.empty()) {
    line("Unit-root tests (deseasonalized series)");
    line(fmt::format("  {:<4} {:<15} {:>12} {:>12} {:>6}  {}", "Test", "Variant", "Statistic", "5% Crit.",
                     "Lag", "Decision"));
    for (const auto& r : report.stationarity) {
      line(fmt::format("  {:<4} {:<15} {:>12.4f} {:>12.6g} {:>6}  {}", to_string(r.test), to_string(r.variant),
                       r.statistic, r.critical_value_5pct, r.lag_or_bandwidth,
                       r.reject_unit_root ? "reject unit root" : "fail to reject"));
    }
    line();
  }
  if (!report.selection.empty()) {
    line("Model selection (ranked by AIC)");
    line(fmt::format("  {:<14} {:>4} {:>14} {:>14} {:>14} {:>14}", "Model", "k", "AIC", "BIC", "HQC",
                     "Log-likelihood"));
    for (const auto& r : report.selection) {
      if (r.error) {
        line(fmt::format("  {:<14} {:>4} failed: {}", r.model_label, r.k_params, *r.error));
      } else {
        line(fmt::format("  {:<14} {:>4} {:>14.2f} {:>14.2f} {:>14.2f} {:>14.2f}", r.model_label, r.k_params,
                         r.aic, r.bic, r.hqc, r.loglik));
      }
    }
    line("  k counts AR(p) as p + 2 and MS(K)-AR(p) as K*p + K + K (or 1) + K*(K-1).");
    line("  Every row conditions on the largest order's presample values, so log-likelihoods compare.");
    line();
  }

  if (report.chosen_fit) {
    const auto& f = *report.chosen_fit;
    const int k = f.spec.n_regimes;
    line(fmt::format("Chosen model: {}  (loglik {:.2f}, {} EM iterations, {})",
                     model_label(ModelFamily::msar, k, f.spec.ar_order), f.loglik, f.iterations,
                     f.converged ? "converged" : "not converged"));
    line(fmt::format("  {:<7} {:<10} {:>14}", "Regime", "Parameter", "Coefficient"));
    for (int j = 0; j < k; ++j) {
      line(fmt::format("  {:<7} {:<10} {:>14.4f}", j + 1, "mu", f.means(j)));
      for (int i = 0; i < f.spec.ar_order; ++i) {
        line(fmt::format("  {:<7} {:<10} {:>14.4f}", "", fmt::format("beta_{}", i + 1), f.ar(j, i)));
      }
      line(fmt::format("  {:<7} {:<10} {:>14.4f}", "", "sigma^2", f.variance(j)));
    }
    line();
    line("Transition matrix P (row = from, column = to)");
    for (int i = 0; i < k; ++i) {
      std::string row = "  ";
      for (int j = 0; j < k; ++j) row += fmt::format("{:>10.4f}", f.transition(i, j));
      line(row);
    }
    line();
    line("Expected durations (steps)");
    try {
      const auto d = expected_duration(f.transition);
      for (int j = 0; j < k; ++j) line(fmt::format("  regime {}: {:.3f}", j + 1, d(j)));
    } catch (const Error& e) {
      line(fmt::format("  {}", e.what()));
    }
    line("Transitional durations 1/(1 - p_ij) (steps)");
    for (const auto& d : transitional_durations(f.transition)) {
      line(fmt::format("  {} -> {}: {:.3f}", d.from + 1, d.to + 1, d.steps));
    }
    line("Ergodic distribution");
    try {
      const auto pi = ergodic_distribution(f.transition);
      for (int j = 0; j < k; ++j) line(fmt::format("  regime {}: {:.5f}", j + 1, pi(j)));
    } catch (const Error& e) {
      line(fmt::format("  {}", e.what()));
    }
    line();
  }
  if (report.durbin_watson) line(fmt::format("Durbin-Watson (one-step residuals): {:.5f}", *report.durbin_watson));
  if (!report.probability_files.empty()) {
    line("Probability files:");
    for (const auto& p : report.probability_files) line("  " + p);
  }
  return out;
}

void write_report(const FitReport& report, ReportFormat format, const std::filesystem::path& destination) {
  auto out = open_for_write(destination);
  if (format == ReportFormat::json) {
    out << to_json(report).dump(2) << '\n';
  } else {
    out << render_text(report);
  }
  finish_write(out, destination);
}

FitReport read_report(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + source.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("invalid JSON in ") + source.string() + ": " + e.what());
  }
  return report_from_json(j);
}

}  // namespace msar
