#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msar/regime_switching.hpp"
#include "msar/time_series.hpp"

namespace msar {

struct EmConfig {
  int max_iterations = 500;
  // Stop once |L_k - L_{k-1}| < tolerance * |L_{k-1}|.
  double tolerance = 1e-6;
  int restarts = 8;
  std::uint64_t seed = 0;
  // Worker threads for restarts; results do not depend on this.
  int threads = 1;
  // Variance floor as a fraction of the sample variance.
  double variance_floor_ratio = 1e-8;
  // Transition entries are clamped to [floor, 1 - floor] then renormalized.
  double transition_floor = 1e-6;
  // Alternating mean / AR-coefficient passes per M-step.
  int inner_sweeps = 3;
};

struct RestartOutcome {
  int index = 0;
  std::optional<MsArFit> fit;
  std::vector<double> loglik_trace;
  bool degenerate = false;
  std::string error;
};

struct EmReport {
  MsArFit best;
  int best_restart = 0;
  std::vector<RestartOutcome> restarts;
};

// Deterministic starting point for restart `index` (index 0 is unperturbed).
MsArFit initial_guess(const TimeSeries& series, const MsArSpec& spec, const EmConfig& config,
                      int index);

// One E-step plus M-step from `current`. The returned fit carries the
// log-likelihood of `current` (the one the E-step evaluated).
MsArFit em_step(const TimeSeries& series, const MsArFit& current, const EmConfig& config);

// EM iterations from a given start until convergence. trace, when non-null,
// receives the log-likelihood evaluated at every iterate.
MsArFit em_run(const TimeSeries& series, MsArFit start, const EmConfig& config,
               std::vector<double>* trace = nullptr);

// Best of config.restarts EM runs by log-likelihood, regimes ordered by
// ascending mean. Throws Error{estimation_failure} when the series is shorter
// than 10 x free parameters or when every restart degenerates.
EmReport em_fit_detailed(const TimeSeries& series, const MsArSpec& spec, const EmConfig& config);
MsArFit em_fit(const TimeSeries& series, const MsArSpec& spec, const EmConfig& config);

}  // namespace msar
