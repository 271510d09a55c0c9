#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "msar/diagnostics.hpp"
#include "msar/regime_switching.hpp"
#include "msar/series_core.hpp"
#include "msar/time_series.hpp"

namespace msar {

enum class MissingPolicy {
  error,              // any gap or empty value is an error
  interpolate,        // linear fill of interior runs up to 3 steps
  drop_leading_trailing,  // trim empty values at either end, interior gaps are errors
};

struct LoadOptions {
  std::string timestamp_column = "timestamp";
  std::string value_column = "load_mw";
  char delimiter = ',';
  MissingPolicy missing = MissingPolicy::error;
  std::chrono::seconds step = TimeSeries::kHourly;
  bool require_positive = true;
  std::size_t max_interpolated_run = 3;
};

struct LoadedSeries {
  TimeSeries series;
  std::vector<std::size_t> interpolated;  // indices into series
  std::size_t dropped = 0;
};

// Errors carry the 1-based file line number where one applies.
LoadedSeries load_csv(const std::filesystem::path& path, const LoadOptions& options = {});

// timestamp,<value_column>[,regime]; values at 17 significant digits.
void write_series_csv(const std::filesystem::path& path, const TimeSeries& series,
                      const std::string& value_column = "load_mw",
                      const RegimePath* regimes = nullptr);

// timestamp, regime_1_filtered..regime_K_filtered,
// regime_1_smoothed..regime_K_smoothed, map_regime (smoothed argmax).
// Probabilities use 9 significant digits.
void export_probabilities(const std::filesystem::path& destination, const ProbabilityPath& path,
                          const TimeSeries& series);

inline constexpr int kReportSchemaVersion = 1;

struct InputDigest {
  std::string path;
  std::size_t rows = 0;
  std::string first_timestamp;
  std::string last_timestamp;
  std::size_t interpolated = 0;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::string library_version;
  std::string command;
};

struct FitReport {
  InputDigest input;
  SummaryStats summary;
  std::vector<UnitRootResult> stationarity;
  int seasonal_period = 24;
  std::vector<CriteriaRow> selection;
  std::optional<MsArFit> chosen_fit;
  std::optional<double> durbin_watson;
  std::vector<std::string> probability_files;
  Provenance provenance;
};

enum class ReportFormat { json, text };

nlohmann::ordered_json to_json(const MsArFit& fit);
MsArFit fit_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const FitReport& report);
FitReport report_from_json(const nlohmann::json& j);

std::string render_text(const FitReport& report);

// Throws Error{io} when the destination cannot be written.
void write_report(const FitReport& report, ReportFormat format,
                  const std::filesystem::path& destination);
FitReport read_report(const std::filesystem::path& source);

std::string library_version();

}  // namespace msar
