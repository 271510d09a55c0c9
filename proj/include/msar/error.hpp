#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace msar {

enum class ErrorCode {
  insufficient_data,
  degenerate_variance,
  alignment,
  invalid_argument,
  invalid_parameter,
  rank_deficient,
  numerical_degeneracy,
  infinite_duration,
  reducible_chain,
  size_limit,
  estimation_failure,
  parse,
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

// True for codes that indicate a failed estimation rather than bad input.
bool is_estimation_failure(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace msar
