#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msar {

using Timestamp = std::chrono::sys_seconds;

// Parses "YYYY-MM-DDTHH:MM[:SS][Z|+00:00]" (a space is accepted in place of
// 'T'). Only UTC offsets are accepted. Throws Error{parse} on failure.
Timestamp parse_timestamp(std::string_view text);

// Renders as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp ts);

/// Regularly spaced series of finite observations.
///
/// The container is immutable once built; every transform returns a new
/// series that keeps the start instant and step of its input.
class TimeSeries {
 public:
  static constexpr std::chrono::seconds kHourly{3600};

  // Throws Error{invalid_argument} on empty input, non-finite values or a
  // non-positive step.
  explicit TimeSeries(std::vector<double> values,
                      Timestamp start = Timestamp{},
                      std::chrono::seconds step = kHourly);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  Timestamp start() const noexcept { return start_; }
  std::chrono::seconds step() const noexcept { return step_; }
  Timestamp timestamp(std::size_t i) const noexcept {
    return start_ + step_ * static_cast<long long>(i);
  }
  Timestamp end() const noexcept { return timestamp(size() - 1); }

  // Same timing, new values (must have equal length).
  TimeSeries with_values(std::vector<double> values) const;

 private:
  std::vector<double> values_;
  Timestamp start_;
  std::chrono::seconds step_;
};

}  // namespace msar
