#include "msar/error.hpp"

namespace msar {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::degenerate_variance: return "degenerate-variance";
    case ErrorCode::alignment: return "alignment";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::numerical_degeneracy: return "numerical-degeneracy";
    case ErrorCode::infinite_duration: return "infinite-duration";
    case ErrorCode::reducible_chain: return "reducible-chain";
    case ErrorCode::size_limit: return "size-limit";
    case ErrorCode::estimation_failure: return "estimation-failure";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

bool is_estimation_failure(ErrorCode code) noexcept {
  return code == ErrorCode::estimation_failure || code == ErrorCode::rank_deficient ||
         code == ErrorCode::numerical_degeneracy;
}

}  // namespace msar
