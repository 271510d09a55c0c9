#include "msar/time_series.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "msar/error.hpp"

namespace msar {
namespace {

bool read_int(std::string_view text, std::size_t& pos, std::size_t width, int& out) {
  if (pos + width > text.size()) return false;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + width, out);
  if (ec != std::errc{} || ptr != first + width) return false;
  pos += width;
  return true;
}

bool expect(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c) return false;
  ++pos;
  return true;
}

[[noreturn]] void bad_timestamp(std::string_view text) {
  throw Error(ErrorCode::parse, "unparseable timestamp '" + std::string(text) + "'");
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);

  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!read_int(text, pos, 4, y) || !expect(text, pos, '-') || !read_int(text, pos, 2, mo) ||
      !expect(text, pos, '-') || !read_int(text, pos, 2, d)) {
    bad_timestamp(text);
  }
  if (pos < text.size()) {
    if (text[pos] != 'T' && text[pos] != ' ') bad_timestamp(text);
    ++pos;
    if (!read_int(text, pos, 2, h) || !expect(text, pos, ':') || !read_int(text, pos, 2, mi)) {
      bad_timestamp(text);
    }
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      if (!read_int(text, pos, 2, s)) bad_timestamp(text);
    }
    auto zone = text.substr(pos);
    if (!(zone.empty() || zone == "Z" || zone == "+00:00" || zone == "+0000")) bad_timestamp(text);
  }

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) bad_timestamp(text);
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  auto day_point = floor<days>(ts);
  year_month_day ymd{day_point};
  hh_mm_ss hms{ts - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

TimeSeries::TimeSeries(std::vector<double> values, Timestamp start, std::chrono::seconds step)
    : values_(std::move(values)), start_(start), step_(step) {
  if (values_.empty()) throw Error(ErrorCode::invalid_argument, "time series must not be empty");
  if (step_.count() <= 0) throw Error(ErrorCode::invalid_argument, "time series step must be positive");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::invalid_argument,
                  "non-finite value at index " + std::to_string(i));
    }
  }
}

TimeSeries TimeSeries::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) {
    throw Error(ErrorCode::invalid_argument, "replacement values differ in length");
  }
  return TimeSeries(std::move(values), start_, step_);
}

}  // namespace msar
