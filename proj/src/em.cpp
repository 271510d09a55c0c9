#include "msar/em.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "msar/ar.hpp"
#include "msar/error.hpp"

namespace msar {
namespace {

// Row-major so the per-observation loops over joint states are contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double sample_variance(std::span<const double> y) {
  const double m = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double s = 0.0;
  for (double v : y) s += (v - m) * (v - m);
  return s / static_cast<double>(y.size());
}

double variance_floor(const TimeSeries& series, const EmConfig& config) {
  return std::max(config.variance_floor_ratio * sample_variance(series.values()),
                  std::numeric_limits<double>::min());
}

struct Expectation {
  ProbabilityPath path;
  double loglik = 0.0;
};

Expectation expectation(const MsArFit& fit, const TimeSeries& series) {
  auto filtered = hamilton_filter(fit, series);
  return {kim_smoother(fit, filtered.path), filtered.loglik};
}

// Expected complete-data log-likelihood terms that involve the chain.
struct ChainCounts {
  Eigen::MatrixXd transitions;  // expected i -> j transition counts
  Eigen::VectorXd first;        // posterior of s_0
};

ChainCounts chain_counts(const ProbabilityPath& path, const JointStateCodec& codec) {
  const int k = codec.n_regimes();
  const int p = codec.ar_order();
  ChainCounts c{Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k)};
  const auto& sm = path.smoothed;
  for (int x = 0; x < codec.size(); ++x) {
    const double w = sm(0, x);
    c.first(codec.regime(x, p)) += w;
    for (int lag = p; lag >= 1; --lag) c.transitions(codec.regime(x, lag), codec.regime(x, lag - 1)) += w;
  }
  for (Eigen::Index r = 1; r < sm.rows(); ++r) {
    for (int x = 0; x < codec.size(); ++x) c.transitions(codec.regime(x, 1), codec.regime(x, 0)) += sm(r, x);
  }
  return c;
}

double chain_objective(const ChainCounts& c, const Eigen::MatrixXd& P, const Eigen::VectorXd& initial) {
  double q = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (c.transitions(i, j) > 0.0) q += c.transitions(i, j) * std::log(P(i, j));
    }
    if (c.first(i) > 0.0) q += c.first(i) * std::log(initial(i));
  }
  return std::isnan(q) ? -std::numeric_limits<double>::infinity() : q;
}

Eigen::MatrixXd clamp_rows(Eigen::MatrixXd P, double floor) {
  if (P.rows() == 1) return P;
  for (int pass = 0; pass < 3; ++pass) {
    P = P.cwiseMax(floor).cwiseMin(1.0 - floor);
    for (Eigen::Index i = 0; i < P.rows(); ++i) P.row(i) /= P.row(i).sum();
  }
  return P;
}

// Transition update. The closed-form row-normalized counts maximize the
// transition term alone; because the initial distribution is tied to the
// chain's ergodic distribution, the candidate is accepted only if the full
// chain term does not decrease, backtracking toward the current matrix
// otherwise.
void update_chain(MsArFit& fit, const ChainCounts& c, const EmConfig& config) {
  const int k = fit.spec.n_regimes;
  if (k == 1) return;
  const Eigen::MatrixXd& current = fit.transition.matrix();
  Eigen::MatrixXd target = current;
  for (int i = 0; i < k; ++i) {
    const double row = c.transitions.row(i).sum();
    if (row > 0.0) target.row(i) = c.transitions.row(i) / row;
  }
  target = clamp_rows(target, config.transition_floor);

  const double baseline = chain_objective(c, current, fit.initial);
  double step = 1.0;
  for (int attempt = 0; attempt < 40; ++attempt, step *= 0.5) {
    Eigen::MatrixXd candidate = clamp_rows(current + step * (target - current), config.transition_floor);
    try {
      TransitionMatrix tm(candidate);
      Eigen::VectorXd pi = ergodic_distribution(tm);
      if (chain_objective(c, candidate, pi) >= baseline) {
        fit.transition = std::move(tm);
        fit.initial = std::move(pi);
        return;
      }
    } catch (const Error&) {
      // candidate not usable; keep shrinking
    }
  }
}

// Smoothed-probability weighted moments of the lag window
// v = (y_t, ..., y_{t-p}) per joint state. Every M-step quantity is a
// quadratic form in v, so the inner sweeps never touch the data again.
// The data are centered first to keep the cross moments well scaled.
struct WindowMoments {
  int width = 0;
  double center = 0.0;
  std::vector<double> weight;  // S
  std::vector<double> first;   // S x width
  std::vector<double> second;  // S x width x width, lower triangle filled

  double w(int x) const { return weight[static_cast<std::size_t>(x)]; }
  double m(int x, int i) const { return first[static_cast<std::size_t>(x * width + i)]; }
  double c(int x, int i, int l) const {
    if (l > i) std::swap(i, l);
    return second[static_cast<std::size_t>((x * width + i) * width + l)];
  }
};

WindowMoments window_moments(const RowMatrix& gamma, const JointStateCodec& codec, std::span<const double> y) {
  const int p = codec.ar_order();
  const int s = codec.size();
  WindowMoments out;
  out.width = p + 1;
  const auto width = static_cast<std::size_t>(out.width);
  out.center = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  out.weight.assign(static_cast<std::size_t>(s), 0.0);
  out.first.assign(static_cast<std::size_t>(s) * width, 0.0);
  out.second.assign(static_cast<std::size_t>(s) * width * width, 0.0);
  std::vector<double> v(width);
  for (Eigen::Index r = 0; r < gamma.rows(); ++r) {
    const std::size_t t = static_cast<std::size_t>(r) + width - 1;
    for (std::size_t i = 0; i < width; ++i) v[i] = y[t - i] - out.center;
    for (int x = 0; x < s; ++x) {
      const double g = gamma(r, x);
      if (g <= 0.0) continue;
      const auto ux = static_cast<std::size_t>(x);
      out.weight[ux] += g;
      double* m = out.first.data() + ux * width;
      double* c = out.second.data() + ux * width * width;
      for (std::size_t i = 0; i < width; ++i) {
        const double gv = g * v[i];
        m[i] += gv;
        for (std::size_t l = 0; l <= i; ++l) c[i * width + l] += gv * v[l];
      }
    }
  }
  return out;
}

// For joint state x the residual is e = c'v - a'mu with
// c = (1, -beta_1, ..., -beta_p) and a collecting the mean loadings.
std::vector<double> residual_loading(const MsArFit& fit, const JointStateCodec& codec, int x) {
  std::vector<double> a(static_cast<std::size_t>(codec.n_regimes()), 0.0);
  const int j = codec.regime(x, 0);
  a[static_cast<std::size_t>(j)] = 1.0;
  for (int i = 1; i <= codec.ar_order(); ++i) a[static_cast<std::size_t>(codec.regime(x, i))] -= fit.ar(j, i - 1);
  return a;
}

// sum_r gamma * (c'v) for joint state x.
double projected_first(const MsArFit& fit, const WindowMoments& mo, int x, int j) {
  double z = mo.m(x, 0);
  for (int i = 1; i < mo.width; ++i) z -= fit.ar(j, i - 1) * mo.m(x, i);
  return z;
}

// Weighted least squares for the regime means with AR coefficients fixed.
void update_means(MsArFit& fit, const WindowMoments& mo, const JointStateCodec& codec) {
  const int k = codec.n_regimes();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  for (int x = 0; x < codec.size(); ++x) {
    if (mo.w(x) <= 0.0) continue;
    const int j = codec.regime(x, 0);
    const double inv_var = 1.0 / fit.variance(j);
    const auto a = residual_loading(fit, codec, x);
    const double z = projected_first(fit, mo, x, j);
    for (int u = 0; u < k; ++u) {
      const double au = a[static_cast<std::size_t>(u)];
      if (au == 0.0) continue;
      b(u) += inv_var * au * z;
      for (int v = 0; v < k; ++v) A(u, v) += inv_var * mo.w(x) * au * a[static_cast<std::size_t>(v)];
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.rcond() > 1e-13)) return;
  Eigen::VectorXd mu = ldlt.solve(b);
  if (mu.allFinite()) fit.means = mu;
}

// Per-regime weighted least squares for AR coefficients with means fixed.
// With d_i = v_i - mu_{s_{t-i}}, the normal equations need
// sum gamma d_u d_w and sum gamma d_0 d_u.
void update_ar(MsArFit& fit, const WindowMoments& mo, const JointStateCodec& codec) {
  const int k = codec.n_regimes();
  const int p = codec.ar_order();
  std::vector<Eigen::MatrixXd> gram(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(p, p));
  std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(p));
  std::vector<double> mu(static_cast<std::size_t>(p) + 1);
  for (int x = 0; x < codec.size(); ++x) {
    const double w = mo.w(x);
    if (w <= 0.0) continue;
    const auto j = static_cast<std::size_t>(codec.regime(x, 0));
    for (int i = 0; i <= p; ++i) mu[static_cast<std::size_t>(i)] = fit.means(codec.regime(x, i));
    auto cross = [&](int u, int v) {
      const double mu_u = mu[static_cast<std::size_t>(u)];
      const double mu_v = mu[static_cast<std::size_t>(v)];
      return mo.c(x, u, v) - mu_u * mo.m(x, v) - mu_v * mo.m(x, u) + mu_u * mu_v * w;
    };
    for (int u = 1; u <= p; ++u) {
      rhs[j](u - 1) += cross(0, u);
      for (int v = 1; v <= u; ++v) gram[j](u - 1, v - 1) += cross(u, v);
    }
  }
  for (int j = 0; j < k; ++j) {
    // LDLT reads the lower triangle only.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram[static_cast<std::size_t>(j)]);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.rcond() > 1e-13)) continue;
    Eigen::VectorXd beta = ldlt.solve(rhs[static_cast<std::size_t>(j)]);
    if (beta.allFinite()) fit.ar.row(j) = beta.transpose();
  }
}

// sum gamma e^2 = c'Cc - 2 d c'm + d^2 w, with d = a'mu.
void update_variances(MsArFit& fit, const WindowMoments& mo, const JointStateCodec& codec, double floor) {
  const int k = codec.n_regimes();
  const int width = mo.width;
  Eigen::VectorXd sse = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(k);
  std::vector<double> c(static_cast<std::size_t>(width));
  for (int x = 0; x < codec.size(); ++x) {
    const double w = mo.w(x);
    if (w <= 0.0) continue;
    const int j = codec.regime(x, 0);
    c[0] = 1.0;
    for (int i = 1; i < width; ++i) c[static_cast<std::size_t>(i)] = -fit.ar(j, i - 1);
    const auto a = residual_loading(fit, codec, x);
    double d = 0.0;
    for (int u = 0; u < k; ++u) d += a[static_cast<std::size_t>(u)] * fit.means(u);
    double quad = 0.0;
    for (int i = 0; i < width; ++i) {
      for (int l = 0; l < width; ++l) {
        quad += c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(l)] * mo.c(x, i, l);
      }
    }
    const double cm = projected_first(fit, mo, x, j);
    sse(j) += std::max(quad - 2.0 * d * cm + d * d * w, 0.0);
    weight(j) += w;
  }
  if (fit.spec.variance_mode == VarianceMode::shared) {
    fit.variances(0) = std::max(sse.sum() / weight.sum(), floor);
    return;
  }
  for (int j = 0; j < k; ++j) {
    if (weight(j) > 0.0) fit.variances(j) = std::max(sse(j) / weight(j), floor);
  }
}

MsArFit maximization(const MsArFit& current, const ProbabilityPath& path, const TimeSeries& series,
                     const EmConfig& config, double floor) {
  const JointStateCodec codec(current.spec.n_regimes, current.spec.ar_order);
  MsArFit next = current;
  update_chain(next, chain_counts(path, codec), config);
  const auto mo = window_moments(path.smoothed, codec, series.values());
  // Work in centered coordinates; AR coefficients are shift invariant.
  next.means.array() -= mo.center;
  for (int sweep = 0; sweep < std::max(1, config.inner_sweeps); ++sweep) {
    update_means(next, mo, codec);
    update_ar(next, mo, codec);
  }
  update_variances(next, mo, codec, floor);
  next.means.array() += mo.center;
  return next;
}

bool at_floor(const MsArFit& fit, double floor) {
  return (fit.variances.array() <= floor * (1.0 + 1e-9)).any();
}

}  // namespace

MsArFit initial_guess(const TimeSeries& series, const MsArSpec& spec, const EmConfig& config,
                      int index) {
  const int k = spec.n_regimes;
  const int p = spec.ar_order;
  if (k < 1 || p < 1) throw Error(ErrorCode::invalid_argument, "MS-AR needs n_regimes >= 1 and ar_order >= 1");
  const double floor = variance_floor(series, config);
  const double total_var = sample_variance(series.values());

  std::vector<double> sorted(series.values().begin(), series.values().end());
  std::sort(sorted.begin(), sorted.end());
  MsArFit fit;
  fit.spec = spec;
  fit.means.resize(k);
  Eigen::VectorXd group_var(k);
  for (int g = 0; g < k; ++g) {
    const auto lo = sorted.size() * static_cast<std::size_t>(g) / static_cast<std::size_t>(k);
    const auto hi = sorted.size() * static_cast<std::size_t>(g + 1) / static_cast<std::size_t>(k);
    std::span<const double> part(sorted.data() + lo, hi - lo);
    fit.means(g) = std::accumulate(part.begin(), part.end(), 0.0) / static_cast<double>(part.size());
    group_var(g) = std::max(part.size() > 1 ? sample_variance(part) : total_var, floor);
  }
  if (spec.variance_mode == VarianceMode::shared) {
    fit.variances = Eigen::VectorXd::Constant(1, group_var.mean());
  } else {
    fit.variances = group_var;
  }

  fit.ar = Eigen::MatrixXd::Zero(k, p);
  try {
    const auto ar = fit_ar(series, p);
    for (int i = 0; i < p; ++i) fit.ar.col(i).setConstant(ar.coefficients[static_cast<std::size_t>(i)]);
  } catch (const Error&) {
    // leave the AR part at zero
  }

  Eigen::MatrixXd P = TransitionMatrix::with_diagonal(k, 0.9).matrix();
  if (index > 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double sd = std::sqrt(total_var);
    for (int j = 0; j < k; ++j) fit.means(j) += 0.25 * sd * z(rng);
    for (Eigen::Index j = 0; j < fit.variances.size(); ++j) {
      fit.variances(j) = std::max(fit.variances(j) * std::exp(0.5 * z(rng)), floor);
    }
    fit.ar *= 0.5 + 0.5 * u(rng);
    if (k > 1) {
      for (int i = 0; i < k; ++i) {
        const double stay = 0.6 + 0.38 * u(rng);
        P.row(i).setConstant((1.0 - stay) / (k - 1));
        P(i, i) = stay;
      }
    }
  }
  fit.transition = TransitionMatrix(P);
  fit.initial = ergodic_distribution(fit.transition);
  return fit;
}

MsArFit em_step(const TimeSeries& series, const MsArFit& current, const EmConfig& config) {
  validate(current);
  auto e = expectation(current, series);
  MsArFit next = maximization(current, e.path, series, config, variance_floor(series, config));
  next.loglik = e.loglik;
  return next;
}

MsArFit em_run(const TimeSeries& series, MsArFit start, const EmConfig& config,
               std::vector<double>* trace) {
  validate(start);
  const double floor = variance_floor(series, config);
  MsArFit fit = std::move(start);
  fit.converged = false;
  fit.iterations = 0;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int iter = 0;; ++iter) {
    auto e = expectation(fit, series);
    if (trace) trace->push_back(e.loglik);
    fit.loglik = e.loglik;
    if (iter > 0 && std::abs(e.loglik - previous) < config.tolerance * std::abs(previous)) {
      fit.converged = true;
      break;
    }
    if (iter >= config.max_iterations) break;
    previous = e.loglik;
    const double ll = fit.loglik;
    fit = maximization(fit, e.path, series, config, floor);
    fit.loglik = ll;
    fit.iterations = iter + 1;
  }
  canonicalize(fit);
  return fit;
}

EmReport em_fit_detailed(const TimeSeries& series, const MsArSpec& spec, const EmConfig& config) {
  const int k_params = spec.free_parameters();
  const std::size_t needed = 10 * static_cast<std::size_t>(k_params);
  if (series.size() < needed) {
    std::ostringstream msg;
    msg << "MS(" << spec.n_regimes << ")-AR(" << spec.ar_order << ") needs at least " << needed
        << " observations (10 x " << k_params << " free parameters), got " << series.size();
    throw Error(ErrorCode::estimation_failure, msg.str());
  }
  const int restarts = std::max(1, config.restarts);
  const double floor = variance_floor(series, config);

  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(restarts));
  auto run = [&](int i) {
    auto& out = outcomes[static_cast<std::size_t>(i)];
    out.index = i;
    try {
      auto fit = em_run(series, initial_guess(series, spec, config, i), config, &out.loglik_trace);
      out.degenerate = at_floor(fit, floor) || !std::isfinite(fit.loglik);
      out.fit = std::move(fit);
    } catch (const Error& e) {
      out.error = e.what();
    }
  };

  const int workers = std::clamp(config.threads, 1, restarts);
  if (workers == 1) {
    for (int i = 0; i < restarts; ++i) run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < restarts; i = next++) run(i);
      });
    }
  }

  // Reduce in restart order so the result does not depend on scheduling.
  int best = -1;
  for (const auto& o : outcomes) {
    if (!o.fit || o.degenerate) continue;
    if (best < 0 || o.fit->loglik > outcomes[static_cast<std::size_t>(best)].fit->loglik) best = o.index;
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "all " << restarts << " EM restarts failed or degenerated";
    for (const auto& o : outcomes) {
      msg << "; restart " << o.index << ": ";
      if (!o.error.empty()) {
        msg << o.error;
      } else {
        msg << "variance floor hit, loglik " << o.fit->loglik;
      }
    }
    throw Error(ErrorCode::estimation_failure, msg.str());
  }
  EmReport report;
  report.best = *outcomes[static_cast<std::size_t>(best)].fit;
  report.best_restart = best;
  report.restarts = std::move(outcomes);
  return report;
}

MsArFit em_fit(const TimeSeries& series, const MsArSpec& spec, const EmConfig& config) {
  return em_fit_detailed(series, spec, config).best;
}

}  // namespace msar
