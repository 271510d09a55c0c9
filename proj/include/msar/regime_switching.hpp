#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "msar/time_series.hpp"

namespace msar {

// Regimes are 0-based indices everywhere in this API except RegimePath
// labels, which are 1-based to match the usual "regime 1 = low" reading.

enum class VarianceMode { per_regime, shared };

struct MsArSpec {
  int n_regimes = 2;
  int ar_order = 1;
  VarianceMode variance_mode = VarianceMode::per_regime;

  // K*p (AR) + K (means) + K or 1 (variances) + K*(K-1) (transitions).
  int free_parameters() const;
  // K^(p+1): size of the (s_t, s_{t-1}, ..., s_{t-p}) state used by the filter.
  int joint_states() const;
};

/// Row-stochastic K x K matrix, entry (i, j) = Pr(s_t = j | s_{t-1} = i).
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  // Throws Error{invalid_parameter} unless every entry is in [0, 1] and every
  // row sums to 1 within 1e-12.
  explicit TransitionMatrix(Eigen::MatrixXd entries);

  // `stay` on the diagonal, the remainder spread evenly across each row.
  static TransitionMatrix with_diagonal(int n_regimes, double stay);

  int size() const noexcept { return static_cast<int>(entries_.rows()); }
  double operator()(int from, int to) const { return entries_(from, to); }
  const Eigen::MatrixXd& matrix() const noexcept { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

/// Parameters of the mean-adjusted MS(K)-AR(p) model
///   y_t - mu[s_t] = sum_i ar(s_t, i-1) * (y_{t-i} - mu[s_{t-i}]) + e_t,
///   e_t ~ N(0, variance(s_t)).
struct MsArFit {
  MsArSpec spec;
  Eigen::VectorXd means;       // K, ascending after estimation
  Eigen::MatrixXd ar;          // K x p
  Eigen::VectorXd variances;   // K, or 1 in shared mode
  TransitionMatrix transition;
  Eigen::VectorXd initial;     // distribution of the first regime s_0
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;

  double variance(int regime) const {
    return variances.size() == 1 ? variances(0) : variances(regime);
  }
};

// Checks shapes, probability vectors and the variance sign. Simulation
// accepts zero variances, estimation does not.
void validate(const MsArFit& params, bool allow_zero_variance = false);

// Reorders regimes so that means ascend, permuting every per-regime field.
void canonicalize(MsArFit& params);

// Joint state (s_t, ..., s_{t-p}) packed as s_t + K*s_{t-1} + ... + K^p*s_{t-p}.
class JointStateCodec {
 public:
  JointStateCodec(int n_regimes, int ar_order);

  int n_regimes() const noexcept { return k_; }
  int ar_order() const noexcept { return p_; }
  int size() const noexcept { return size_; }

  // Regime at lag `lag` (0 = current) of the packed state.
  int regime(int state, int lag) const noexcept {
    return table_[static_cast<std::size_t>(state) * static_cast<std::size_t>(p_ + 1) + static_cast<std::size_t>(lag)];
  }
  int encode(std::span<const int> regimes) const;
  // Successor state after the chain moves to `next`.
  int successor(int state, int next) const noexcept { return next + k_ * (state % pow_[p_]); }

 private:
  int k_;
  int p_;
  int size_;
  std::vector<int> pow_;
  std::vector<int> table_;  // regime by (state, lag)
};

// Gaussian density of y_t given the joint state. window holds
// (y_t, y_{t-1}, ..., y_{t-p}); joint_state holds (s_t, ..., s_{t-p}).
double conditional_density(const MsArFit& params, std::span<const double> window,
                           std::span<const int> joint_state);
double log_conditional_density(const MsArFit& params, std::span<const double> window,
                               std::span<const int> joint_state);

/// Regime probabilities over a series of length T.
///
/// The joint matrices have one row per effective observation t = p..T-1
/// (row r is time r + p) and one column per packed joint state. The marginal
/// views are T x K: for t >= p they marginalize the joint row at t, and for
/// t < p they read the lagged component of the joint row at t = p, so
/// "filtered" there means conditioned on y_0..y_p.
struct ProbabilityPath {
  int n_regimes = 0;
  int ar_order = 0;
  Eigen::MatrixXd predicted;
  Eigen::MatrixXd filtered;
  Eigen::MatrixXd smoothed;   // empty until kim_smoother runs
  Eigen::MatrixXd predicted_marginal;
  Eigen::MatrixXd filtered_marginal;
  Eigen::MatrixXd smoothed_marginal;

  std::size_t length() const noexcept { return static_cast<std::size_t>(filtered_marginal.rows()); }
  bool has_smoothed() const noexcept { return smoothed.size() > 0; }
};

struct FilterResult {
  ProbabilityPath path;
  double loglik = 0.0;
};

// Forward recursion over joint states, started from initial and the chain.
// Throws Error{numerical_degeneracy} naming t when no joint state carries
// positive weight.
FilterResult hamilton_filter(const MsArFit& params, const TimeSeries& series);

// Backward recursion; fills smoothed and smoothed_marginal.
ProbabilityPath kim_smoother(const MsArFit& params, const ProbabilityPath& filtered);

double loglik(const MsArFit& params, const TimeSeries& series);

// 1 / (1 - p_jj), in series steps. Throws Error{infinite_duration} when some
// p_jj == 1.
Eigen::VectorXd expected_duration(const TransitionMatrix& transition);

/// 1 / (1 - p_ij) for i != j.
///
/// Not a duration in the renewal sense. Some load-forecasting reports quote
/// this figure as a "transitional duration", so it is reported alongside
/// expected_duration for comparison.
struct TransitionalDuration {
  int from = 0;
  int to = 0;
  double steps = 0.0;
};
std::vector<TransitionalDuration> transitional_durations(const TransitionMatrix& transition);

// Stationary distribution pi P = pi. Throws Error{reducible_chain} unless
// the chain is irreducible.
Eigen::VectorXd ergodic_distribution(const TransitionMatrix& transition);

enum class ProbabilitySource { filtered, smoothed };

struct RegimePath {
  std::vector<int> labels;  // 1..K
  ProbabilitySource source = ProbabilitySource::smoothed;
};

// argmax of the marginal row; ties go to the lower regime.
RegimePath classify_regimes(const ProbabilityPath& path, ProbabilitySource source);

struct SimulatedPath {
  TimeSeries series;
  RegimePath regimes;
};

// Latent chain starts from a draw of params.initial; pre-sample lags are
// the regime means. Zero variances give deterministic paths.
SimulatedPath simulate_msar(const MsArFit& params, std::size_t n, std::uint64_t seed,
                            std::size_t burn_in = 0, Timestamp start = Timestamp{});

struct ExactPosterior {
  double loglik = 0.0;
  Eigen::MatrixXd posteriors;  // T x K
};

// Brute-force sum over all K^T regime paths. Throws Error{size_limit} when
// K^T > 2^20.
ExactPosterior enumerate_exact(const MsArFit& params, const TimeSeries& series);

enum class ResidualKind {
  one_step,  // y_t - E[y_t | y_0..y_{t-1}] under the predicted probabilities
  smoothed,  // y_t - sum over joint states of smoothed weight * conditional mean
};

// One residual per effective observation t = p..T-1.
std::vector<double> msar_residuals(const MsArFit& params, const TimeSeries& series,
                                   const ProbabilityPath& path, ResidualKind kind);

}  // namespace msar
