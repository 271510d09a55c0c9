#include "msar/regime_switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "msar/error.hpp"

namespace msar {
namespace {

constexpr double kRowTolerance = 1e-12;
constexpr int kMaxJointStates = 1 << 16;
// Predicted probabilities below this contribute nothing to the smoother.
constexpr double kProbabilityFloor = 1e-300;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::invalid_parameter, what); }

// Conditional mean of y_t for packed joint state `state`; y points at y_t so
// y[-i] is y_{t-i}.
double conditional_mean(const MsArFit& params, const JointStateCodec& codec, const double* y,
                        int state) {
  const int current = codec.regime(state, 0);
  double m = params.means(current);
  for (int i = 1; i <= codec.ar_order(); ++i) {
    m += params.ar(current, i - 1) * (y[-i] - params.means(codec.regime(state, i)));
  }
  return m;
}

double log_normal(double x, double mean, double variance) {
  const double e = x - mean;
  return -kHalfLog2Pi - 0.5 * std::log(variance) - 0.5 * e * e / variance;
}

// (T - p) x S matrix of log conditional densities.
Eigen::MatrixXd log_densities(const MsArFit& params, const JointStateCodec& codec,
                              std::span<const double> y) {
  const int p = codec.ar_order();
  const auto n = static_cast<Eigen::Index>(y.size()) - p;
  const int k = codec.n_regimes();
  std::vector<double> log_norm(static_cast<std::size_t>(k)), inv_var(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    log_norm[static_cast<std::size_t>(j)] = -kHalfLog2Pi - 0.5 * std::log(params.variance(j));
    inv_var[static_cast<std::size_t>(j)] = 1.0 / params.variance(j);
  }
  Eigen::MatrixXd out(n, codec.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const double* yt = y.data() + r + p;
    for (int x = 0; x < codec.size(); ++x) {
      const auto j = static_cast<std::size_t>(codec.regime(x, 0));
      const double e = *yt - conditional_mean(params, codec, yt, x);
      out(r, x) = log_norm[j] - 0.5 * e * e * inv_var[j];
    }
  }
  return out;
}

// Prior over the first joint state (s_p, ..., s_0).
Eigen::RowVectorXd initial_joint(const MsArFit& params, const JointStateCodec& codec) {
  const int p = codec.ar_order();
  const auto& P = params.transition.matrix();
  Eigen::RowVectorXd prior(codec.size());
  for (int x = 0; x < codec.size(); ++x) {
    double w = params.initial(codec.regime(x, p));
    for (int lag = p; lag >= 1; --lag) w *= P(codec.regime(x, lag), codec.regime(x, lag - 1));
    prior(x) = w;
  }
  return prior;
}

// T x K marginal view of a (T - p) x S joint matrix; see ProbabilityPath.
Eigen::MatrixXd marginalize(const Eigen::MatrixXd& joint, const JointStateCodec& codec) {
  const int p = codec.ar_order();
  const int k = codec.n_regimes();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(joint.rows() + p, k);
  for (int t = 0; t < p; ++t) {
    for (int x = 0; x < codec.size(); ++x) out(t, codec.regime(x, p - t)) += joint(0, x);
  }
  for (Eigen::Index r = 0; r < joint.rows(); ++r) {
    for (int x = 0; x < codec.size(); ++x) out(r + p, codec.regime(x, 0)) += joint(r, x);
  }
  return out;
}

void check_series(const MsArFit& params, const TimeSeries& series) {
  if (series.size() <= static_cast<std::size_t>(params.spec.ar_order)) {
    throw Error(ErrorCode::insufficient_data, "series length must exceed the AR order");
  }
}

}  // namespace

int MsArSpec::free_parameters() const {
  const int k = n_regimes;
  return k * ar_order + k + (variance_mode == VarianceMode::shared ? 1 : k) + k * (k - 1);
}

int MsArSpec::joint_states() const {
  int s = 1;
  for (int i = 0; i <= ar_order; ++i) s *= n_regimes;
  return s;
}

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) invalid("transition matrix must be square and non-empty");
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      const double v = entries_(i, j);
      if (!(v >= 0.0 && v <= 1.0)) invalid("transition entries must lie in [0, 1]");
    }
    if (std::abs(entries_.row(i).sum() - 1.0) > kRowTolerance) {
      invalid("transition row " + std::to_string(i + 1) + " does not sum to 1");
    }
  }
}

TransitionMatrix TransitionMatrix::with_diagonal(int n_regimes, double stay) {
  Eigen::MatrixXd m(n_regimes, n_regimes);
  const double off = n_regimes > 1 ? (1.0 - stay) / (n_regimes - 1) : 0.0;
  m.setConstant(off);
  m.diagonal().setConstant(n_regimes > 1 ? stay : 1.0);
  return TransitionMatrix(m);
}

JointStateCodec::JointStateCodec(int n_regimes, int ar_order) : k_(n_regimes), p_(ar_order) {
  if (k_ < 1 || p_ < 0) throw Error(ErrorCode::invalid_argument, "invalid joint state dimensions");
  if (std::pow(static_cast<double>(k_), p_ + 1) > kMaxJointStates) {
    throw Error(ErrorCode::size_limit, "K^(p+1) joint states exceed " + std::to_string(kMaxJointStates));
  }
  pow_.resize(static_cast<std::size_t>(p_) + 2);
  pow_[0] = 1;
  for (std::size_t i = 1; i < pow_.size(); ++i) pow_[i] = pow_[i - 1] * k_;
  size_ = pow_[static_cast<std::size_t>(p_) + 1];
  const auto width = static_cast<std::size_t>(p_) + 1;
  table_.resize(static_cast<std::size_t>(size_) * width);
  for (int x = 0; x < size_; ++x) {
    for (std::size_t lag = 0; lag < width; ++lag) table_[static_cast<std::size_t>(x) * width + lag] = (x / pow_[lag]) % k_;
  }
}

int JointStateCodec::encode(std::span<const int> regimes) const {
  if (regimes.size() != static_cast<std::size_t>(p_) + 1) {
    throw Error(ErrorCode::invalid_argument, "joint state needs p + 1 regimes");
  }
  int state = 0;
  for (std::size_t lag = 0; lag < regimes.size(); ++lag) {
    if (regimes[lag] < 0 || regimes[lag] >= k_) throw Error(ErrorCode::invalid_argument, "regime index out of range");
    state += regimes[lag] * pow_[lag];
  }
  return state;
}

void validate(const MsArFit& params, bool allow_zero_variance) {
  const int k = params.spec.n_regimes;
  const int p = params.spec.ar_order;
  if (k < 1 || p < 1) invalid("MS-AR needs n_regimes >= 1 and ar_order >= 1");
  if (params.means.size() != k) invalid("means must have one entry per regime");
  if (params.ar.rows() != k || params.ar.cols() != p) invalid("AR coefficients must be K x p");
  const Eigen::Index nv = params.spec.variance_mode == VarianceMode::shared ? 1 : k;
  if (params.variances.size() != nv) invalid("variance count does not match the variance mode");
  for (Eigen::Index j = 0; j < nv; ++j) {
    const double v = params.variances(j);
    if (!std::isfinite(v) || v < 0.0 || (!allow_zero_variance && v == 0.0)) {
      invalid("regime variances must be positive");
    }
  }
  if (!params.means.allFinite() || !params.ar.allFinite()) invalid("means and AR coefficients must be finite");
  if (params.transition.size() != k) invalid("transition matrix must be K x K");
  if (params.initial.size() != k || (params.initial.array() < 0.0).any() ||
      std::abs(params.initial.sum() - 1.0) > kRowTolerance) {
    invalid("initial distribution must be a probability vector of length K");
  }
}

void canonicalize(MsArFit& params) {
  const int k = params.spec.n_regimes;
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return params.means(a) < params.means(b); });
  if (std::is_sorted(order.begin(), order.end())) return;

  MsArFit out = params;
  Eigen::MatrixXd P(k, k);
  for (int a = 0; a < k; ++a) {
    const int from = order[static_cast<std::size_t>(a)];
    out.means(a) = params.means(from);
    out.ar.row(a) = params.ar.row(from);
    if (params.variances.size() == k) out.variances(a) = params.variances(from);
    out.initial(a) = params.initial(from);
    for (int b = 0; b < k; ++b) P(a, b) = params.transition(from, order[static_cast<std::size_t>(b)]);
  }
  out.transition = TransitionMatrix(P);
  params = std::move(out);
}

double log_conditional_density(const MsArFit& params, std::span<const double> window,
                               std::span<const int> joint_state) {
  validate(params);
  const int p = params.spec.ar_order;
  if (window.size() != static_cast<std::size_t>(p) + 1) {
    throw Error(ErrorCode::invalid_argument, "window must hold p + 1 values");
  }
  for (double v : window) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "window values must be finite");
  }
  JointStateCodec codec(params.spec.n_regimes, p);
  const int state = codec.encode(joint_state);
  const double variance = params.variance(joint_state[0]);

  // conditional_mean reads y[-i]; reverse the window into chronological order.
  std::vector<double> chrono(window.rbegin(), window.rend());
  const double* yt = chrono.data() + p;
  return log_normal(*yt, conditional_mean(params, codec, yt, state), variance);
}

double conditional_density(const MsArFit& params, std::span<const double> window,
                           std::span<const int> joint_state) {
  return std::exp(log_conditional_density(params, window, joint_state));
}

FilterResult hamilton_filter(const MsArFit& params, const TimeSeries& series) {
  validate(params);
  check_series(params, series);
  const JointStateCodec codec(params.spec.n_regimes, params.spec.ar_order);
  const int p = codec.ar_order();
  const int k = codec.n_regimes();
  const int s = codec.size();
  const auto& P = params.transition.matrix();
  const auto y = series.values();
  const Eigen::MatrixXd logf = log_densities(params, codec, y);
  const auto n = logf.rows();

  FilterResult out;
  auto& path = out.path;
  path.n_regimes = k;
  path.ar_order = p;
  path.predicted.resize(n, s);
  path.filtered.resize(n, s);

  const int tail = s / k;  // K^p
  Eigen::RowVectorXd pred = initial_joint(params, codec);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (r > 0) {
      for (int x = 0; x < s; ++x) {
        const int rest = x / k;
        double acc = 0.0;
        for (int oldest = 0; oldest < k; ++oldest) acc += path.filtered(r - 1, rest + tail * oldest);
        pred(x) = acc * P(codec.regime(x, 1), codec.regime(x, 0));
      }
    }
    path.predicted.row(r) = pred;

    double peak = -std::numeric_limits<double>::infinity();
    for (int x = 0; x < s; ++x) {
      if (pred(x) > 0.0) peak = std::max(peak, logf(r, x));
    }
    double total = 0.0;
    for (int x = 0; x < s; ++x) {
      const double w = pred(x) > 0.0 ? pred(x) * std::exp(logf(r, x) - peak) : 0.0;
      path.filtered(r, x) = w;
      total += w;
    }
    if (!(total > 0.0) || !std::isfinite(total) || !std::isfinite(peak)) {
      throw Error(ErrorCode::numerical_degeneracy,
                  "all joint-state densities vanish at t=" + std::to_string(r + p));
    }
    path.filtered.row(r) /= total;
    out.loglik += peak + std::log(total);
  }

  path.predicted_marginal = marginalize(path.predicted, codec);
  path.filtered_marginal = marginalize(path.filtered, codec);
  return out;
}

ProbabilityPath kim_smoother(const MsArFit& params, const ProbabilityPath& filtered) {
  validate(params);
  const int k = params.spec.n_regimes;
  const int p = params.spec.ar_order;
  if (filtered.n_regimes != k || filtered.ar_order != p || filtered.filtered.rows() == 0 ||
      filtered.predicted.rows() != filtered.filtered.rows()) {
    throw Error(ErrorCode::invalid_argument, "filter output does not match the parameters");
  }
  const JointStateCodec codec(k, p);
  const int s = codec.size();
  const auto& P = params.transition.matrix();
  const auto n = filtered.filtered.rows();

  ProbabilityPath out = filtered;
  out.smoothed.resize(n, s);
  out.smoothed.row(n - 1) = filtered.filtered.row(n - 1);
  for (Eigen::Index r = n - 2; r >= 0; --r) {
    double total = 0.0;
    for (int x = 0; x < s; ++x) {
      const int current = codec.regime(x, 0);
      double acc = 0.0;
      for (int next = 0; next < k; ++next) {
        const int succ = codec.successor(x, next);
        const double pred = filtered.predicted(r + 1, succ);
        if (pred > kProbabilityFloor) acc += out.smoothed(r + 1, succ) * P(current, next) / pred;
      }
      const double v = filtered.filtered(r, x) * acc;
      out.smoothed(r, x) = v;
      total += v;
    }
    if (total > 0.0) out.smoothed.row(r) /= total;
  }
  out.smoothed_marginal = marginalize(out.smoothed, codec);
  return out;
}

double loglik(const MsArFit& params, const TimeSeries& series) {
  return hamilton_filter(params, series).loglik;
}

Eigen::VectorXd expected_duration(const TransitionMatrix& transition) {
  const int k = transition.size();
  Eigen::VectorXd d(k);
  for (int j = 0; j < k; ++j) {
    const double stay = transition(j, j);
    if (stay >= 1.0) {
      throw Error(ErrorCode::infinite_duration,
                  "regime " + std::to_string(j + 1) + " is absorbing (p_jj = 1)");
    }
    d(j) = 1.0 / (1.0 - stay);
  }
  return d;
}

std::vector<TransitionalDuration> transitional_durations(const TransitionMatrix& transition) {
  std::vector<TransitionalDuration> out;
  for (int i = 0; i < transition.size(); ++i) {
    for (int j = 0; j < transition.size(); ++j) {
      if (i == j) continue;
      const double v = transition(i, j);
      out.push_back({i, j, v >= 1.0 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - v)});
    }
  }
  return out;
}

Eigen::VectorXd ergodic_distribution(const TransitionMatrix& transition) {
  const int k = transition.size();
  const auto& P = transition.matrix();

  // Irreducible iff every state reaches every other through positive entries.
  std::vector<std::vector<char>> reach(static_cast<std::size_t>(k), std::vector<char>(static_cast<std::size_t>(k), 0));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = (i == j) || P(i, j) > 0.0;
  }
  for (std::size_t m = 0; m < reach.size(); ++m) {
    for (std::size_t i = 0; i < reach.size(); ++i) {
      for (std::size_t j = 0; j < reach.size(); ++j) {
        if (reach[i][m] && reach[m][j]) reach[i][j] = 1;
      }
    }
  }
  for (const auto& row : reach) {
    if (std::find(row.begin(), row.end(), 0) != row.end()) {
      throw Error(ErrorCode::reducible_chain, "transition matrix is reducible; no unique ergodic distribution");
    }
  }

  Eigen::MatrixXd a = P.transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b(k - 1) = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(b);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

RegimePath classify_regimes(const ProbabilityPath& path, ProbabilitySource source) {
  const Eigen::MatrixXd& m =
      source == ProbabilitySource::smoothed ? path.smoothed_marginal : path.filtered_marginal;
  if (m.size() == 0) throw Error(ErrorCode::invalid_argument, "requested probabilities are not populated");
  RegimePath out;
  out.source = source;
  out.labels.resize(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(t, j) > m(t, best)) best = j;
    }
    out.labels[static_cast<std::size_t>(t)] = static_cast<int>(best) + 1;
  }
  return out;
}

SimulatedPath simulate_msar(const MsArFit& params, std::size_t n, std::uint64_t seed,
                            std::size_t burn_in, Timestamp start) {
  validate(params, /*allow_zero_variance=*/true);
  if (n < 1) throw Error(ErrorCode::invalid_argument, "simulate_msar needs n >= 1");
  const int k = params.spec.n_regimes;
  const auto p = static_cast<std::size_t>(params.spec.ar_order);
  const auto& P = params.transition.matrix();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto draw = [&](auto&& weight) {
    const double u = unit(rng);
    double cum = 0.0;
    for (int j = 0; j < k; ++j) {
      cum += weight(j);
      if (u < cum) return j;
    }
    // u landed in rounding slack; take the last regime with positive weight.
    for (int j = k - 1; j >= 0; --j) {
      if (weight(j) > 0.0) return j;
    }
    return k - 1;
  };

  const std::size_t total = burn_in + n;
  std::vector<int> regime(p + total);
  std::vector<double> y(p + total);
  const int first = draw([&](int j) { return params.initial(j); });
  for (std::size_t i = 0; i < p; ++i) {
    regime[i] = first;
    y[i] = params.means(first);
  }
  for (std::size_t t = p; t < p + total; ++t) {
    const int s = t == p ? first : draw([&](int j) { return P(regime[t - 1], j); });
    regime[t] = s;
    double value = params.means(s);
    for (std::size_t i = 1; i <= p; ++i) {
      value += params.ar(s, static_cast<Eigen::Index>(i - 1)) * (y[t - i] - params.means(regime[t - i]));
    }
    const double sd = std::sqrt(params.variance(s));
    if (sd > 0.0) value += sd * noise(rng);
    y[t] = value;
  }

  const auto skip = static_cast<std::ptrdiff_t>(p + burn_in);
  RegimePath labels;
  labels.source = ProbabilitySource::smoothed;
  for (auto it = regime.begin() + skip; it != regime.end(); ++it) labels.labels.push_back(*it + 1);
  return {TimeSeries(std::vector<double>(y.begin() + skip, y.end()), start), std::move(labels)};
}

ExactPosterior enumerate_exact(const MsArFit& params, const TimeSeries& series) {
  validate(params);
  check_series(params, series);
  const int k = params.spec.n_regimes;
  const int p = params.spec.ar_order;
  const auto T = series.size();
  double paths_d = std::pow(static_cast<double>(k), static_cast<double>(T));
  if (paths_d > static_cast<double>(1u << 20)) {
    throw Error(ErrorCode::size_limit, "exact enumeration limited to 2^20 regime paths");
  }
  const auto paths = static_cast<std::size_t>(std::llround(paths_d));
  const JointStateCodec codec(k, p);
  const Eigen::MatrixXd logf = log_densities(params, codec, series.values());
  const auto& P = params.transition.matrix();

  std::vector<double> logw(paths);
  std::vector<int> s(T);
  std::vector<int> window(static_cast<std::size_t>(p) + 1);
  for (std::size_t path = 0; path < paths; ++path) {
    std::size_t code = path;
    for (std::size_t t = 0; t < T; ++t) {
      s[t] = static_cast<int>(code % static_cast<std::size_t>(k));
      code /= static_cast<std::size_t>(k);
    }
    double lw = std::log(params.initial(s[0]));
    for (std::size_t t = 1; t < T; ++t) lw += std::log(P(s[t - 1], s[t]));
    for (std::size_t t = static_cast<std::size_t>(p); t < T; ++t) {
      for (int lag = 0; lag <= p; ++lag) window[static_cast<std::size_t>(lag)] = s[t - static_cast<std::size_t>(lag)];
      lw += logf(static_cast<Eigen::Index>(t) - p, codec.encode(window));
    }
    logw[path] = lw;
  }

  const double peak = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(peak)) throw Error(ErrorCode::numerical_degeneracy, "every regime path has zero weight");
  double total = 0.0;
  for (double lw : logw) total += std::exp(lw - peak);

  ExactPosterior out;
  out.loglik = peak + std::log(total);
  out.posteriors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), k);
  for (std::size_t path = 0; path < paths; ++path) {
    const double w = std::exp(logw[path] - peak) / total;
    std::size_t code = path;
    for (std::size_t t = 0; t < T; ++t) {
      out.posteriors(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(code % static_cast<std::size_t>(k))) += w;
      code /= static_cast<std::size_t>(k);
    }
  }
  return out;
}

std::vector<double> msar_residuals(const MsArFit& params, const TimeSeries& series,
                                   const ProbabilityPath& path, ResidualKind kind) {
  validate(params);
  check_series(params, series);
  const JointStateCodec codec(params.spec.n_regimes, params.spec.ar_order);
  const int p = codec.ar_order();
  const Eigen::MatrixXd& weights = kind == ResidualKind::smoothed ? path.smoothed : path.predicted;
  const auto y = series.values();
  const auto n = static_cast<Eigen::Index>(y.size()) - p;
  if (weights.rows() != n || weights.cols() != codec.size()) {
    throw Error(ErrorCode::invalid_argument, "probability path does not match the series");
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const double* yt = y.data() + r + p;
    double fitted = 0.0;
    for (int x = 0; x < codec.size(); ++x) fitted += weights(r, x) * conditional_mean(params, codec, yt, x);
    out[static_cast<std::size_t>(r)] = *yt - fitted;
  }
  return out;
}

}  // namespace msar
