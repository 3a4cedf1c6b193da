// Monte Carlo experiments built on the ensemble driver: long-time alignment,
// the sqrt(t) convergence rate, the Stratonovich stationary regime, hitting
// times of the Stratonovich dynamics and hysteresis sweeps.
#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spinsim/dynamics.hpp"
#include "spinsim/ensemble.hpp"
#include "spinsim/integrator.hpp"

namespace spinsim {

// ---------------------------------------------------------------------------
// Recorded ensemble series

struct Column {
  std::string name;
  std::vector<Estimate> values;  // one per recorded time
};

struct EnsembleSeries {
  std::vector<double> t;
  std::vector<Column> columns;
  std::size_t n_requested = 0;
  std::size_t n_ok = 0;
  std::vector<PathError> failures;

  bool partial() const { return !failures.empty(); }

  const Column& column(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return c;
    throw std::out_of_range("no column named " + std::string(name));
  }

  /// Index of the recorded time closest to `time`.
  std::size_t index_near(double time) const {
    if (t.empty()) throw std::out_of_range("empty series");
    const auto it = std::lower_bound(t.begin(), t.end(), time);
    if (it == t.begin()) return 0;
    if (it == t.end()) return t.size() - 1;
    const auto i = static_cast<std::size_t>(it - t.begin());
    return (time - t[i - 1] <= t[i] - time) ? i - 1 : i;
  }

  const Estimate& at(std::string_view name, double time) const {
    return column(name).values[index_near(time)];
  }
  const Estimate& last(std::string_view name) const {
    return column(name).values.back();
  }
};

/// Ensemble over a constant field.
struct EnsembleConfig {
  Mode mode = Mode::NormalizedIto;
  ModelParams params;
  Vec3 mu0 = -e3;
  GridSpec grid{0.0, 100.0, 0.01, 1, true};
  EnsembleOptions ensemble;

  ModeSetup setup() const { return {mode, ConstantField{params.b}, params}; }
};

namespace detail {

inline std::vector<std::size_t> recorded_steps(const GridSpec& g) {
  std::vector<std::size_t> out;
  const std::size_t n = g.steps();
  for (std::size_t k = 0; k <= n; ++k)
    if (g.is_recorded(k)) out.push_back(k);
  return out;
}

/// Runs every path of the ensemble over the full grid.
///   point(state, out): writes names.size() values at each recorded step;
///   step(k, state, scalars): sees every step (k = 0 included).
/// Returns the recorded series and moves per-path scalars into `scalars`.
template <class Point, class Step>
EnsembleSeries record_ensemble(const ModeSetup& setup, const GridSpec& grid,
                               const Vec3& mu0, const EnsembleOptions& opt,
                               const std::vector<std::string>& names,
                               std::vector<double> scalar_init, Point point,
                               Step step,
                               std::vector<std::vector<double>>* scalars) {
  const std::vector<std::size_t> rec = recorded_steps(grid);
  const std::size_t n_cols = names.size();
  const std::size_t n_rec = rec.size();

  EnsembleAccumulator acc = run_ensemble(
      opt, n_cols * n_rec, [&](std::size_t, RngStream rng) {
        PathRecord r;
        r.cells.assign(n_cols * n_rec, 0.0);
        r.scalars = scalar_init;
        std::vector<double> row(n_cols);
        std::size_t j = 0;
        PathState s(mu0, rng, grid.t0);
        integrate_path(setup, grid, s, [&](std::size_t k, const PathState& st) {
          step(k, st, r.scalars);
          if (j < n_rec && rec[j] == k) {
            point(st, row.data());
            for (std::size_t c = 0; c < n_cols; ++c)
              r.cells[c * n_rec + j] = row[c];
            ++j;
          }
          return true;
        });
        return r;
      });

  EnsembleSeries out;
  for (std::size_t k : rec) out.t.push_back(grid.time_at(k));
  for (std::size_t c = 0; c < n_cols; ++c) {
    Column col{names[c], {}};
    col.values.assign(acc.cells.begin() + static_cast<std::ptrdiff_t>(c * n_rec),
                      acc.cells.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_rec));
    out.columns.push_back(std::move(col));
  }
  out.n_requested = opt.n_paths;
  out.n_ok = acc.n_ok();
  out.failures = std::move(acc.failures);
  if (scalars) *scalars = std::move(acc.scalars);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Alignment mu_t . b

struct AlignmentResult {
  EnsembleSeries series;         // column "mu_dot_b"
  double tail_start = 0.0;
  std::vector<double> tail_min;  // per successful path, over [tail_start, T]

  /// Fraction of successful paths whose tail minimum is >= level.
  double fraction_tail_at_least(double level) const {
    if (tail_min.empty()) return 0.0;
    const auto k = std::count_if(tail_min.begin(), tail_min.end(),
                                 [&](double m) { return m >= level; });
    return static_cast<double>(k) / static_cast<double>(tail_min.size());
  }
};

/// Mean and stderr of mu_t . b per recorded time, plus per-path minima over
/// the tail window (default: second half of the grid). Admits alpha = 0.
inline AlignmentResult estimate_alignment(
    const EnsembleConfig& cfg, std::optional<double> tail_start = std::nullopt) {
  const ModeSetup setup = cfg.setup();
  setup.validate(cfg.grid, /*allow_zero_damping=*/true);
  require_unit(cfg.mu0);
  const double ts = tail_start.value_or(0.5 * (cfg.grid.t0 + cfg.grid.t1));
  const Vec3 b = cfg.params.b;

  AlignmentResult res;
  res.tail_start = ts;
  std::vector<std::vector<double>> scalars;
  res.series = detail::record_ensemble(
      setup, cfg.grid, cfg.mu0, cfg.ensemble, {"mu_dot_b"},
      {std::numeric_limits<double>::infinity()},
      [&](const PathState& s, double* out) { out[0] = dot(s.mu, b); },
      [&](std::size_t, const PathState& s, std::vector<double>& sc) {
        if (s.t >= ts) sc[0] = std::min(sc[0], dot(s.mu, b));
      },
      &scalars);
  for (const auto& s : scalars) res.tail_min.push_back(s[0]);
  return res;
}

/// mu_t . b along one path of the ensemble (same stream as path_index).
inline RecordedSeries single_path(const EnsembleConfig& cfg,
                                  std::size_t path_index = 0) {
  return run_path(cfg.setup(), cfg.grid, cfg.mu0,
                  RngStream(cfg.ensemble.seed, path_index),
                  {Observable::MuDotB});
}

// ---------------------------------------------------------------------------
// Long-time behaviour: rate statistic, L2 decay and tail probabilities

/// eps^2 (1 + alpha^2) / (2 alpha): limit of E[h(t)(|b| - mu_t . b)].
inline double rate_limit(const ModelParams& p) {
  return p.eps * p.eps * (1.0 + p.alpha * p.alpha) / (2.0 * p.alpha);
}

/// (2 alpha sqrt 2) / (eps sqrt(1 + alpha^2)): prefactor turning
/// sqrt(t) E[|b| - mu_t . b] into a statistic that tends to 1.
inline double rate_prefactor(const ModelParams& p) {
  return 2.0 * p.alpha * std::sqrt(2.0) /
         (p.eps * std::sqrt(1.0 + p.alpha * p.alpha));
}

/// h(t) / (eps sqrt(2 (1 + alpha^2)) sqrt t): ratio of the two
/// normalizations of the rate statistic; tends to 1 like 1 + O(1/t).
inline double rate_normalization_ratio(const ModelParams& p, double t) {
  return NormProfile::for_model(p)(t) /
         (p.eps * std::sqrt(2.0 * (1.0 + p.alpha * p.alpha) * t));
}

struct TailSpec {
  double beta = 0.25;
  double eta_thresh = 0.5;

  void validate() const {
    if (!(beta >= 0.0 && beta < 0.5))
      throw std::invalid_argument("tail beta must lie in [0, 1/2)");
    if (!std::isfinite(eta_thresh))
      throw std::invalid_argument("tail threshold must be finite");
  }
};

struct LongTimeColumns {
  bool rate = true;  // gap, h_gap, rate_normalized
  bool l2 = true;    // h_gap_sq
  std::optional<TailSpec> tail;  // tail_exceed
};

struct LongTimeResult {
  EnsembleSeries series;
  double limit = 0.0;  // rate_limit(params)
  std::optional<TailSpec> tail;
};

/// One ensemble feeding every long-time estimator. With gap = |b| - mu . b:
///   gap, h_gap = h(t) gap, rate_normalized = rate_prefactor sqrt(t) gap,
///   h_gap_sq = h(t) gap^2, tail_exceed = 1[t^beta gap >= eta_thresh].
inline LongTimeResult long_time_study(const EnsembleConfig& cfg,
                                      const LongTimeColumns& cols = {},
                                      std::ostream& log = std::cerr) {
  const ModeSetup setup = cfg.setup();
  setup.validate(cfg.grid);
  require_unit(cfg.mu0);
  if (cols.tail) cols.tail->validate();
  const ModelParams& p = cfg.params;
  const NormProfile h = NormProfile::for_model(p);
  if (h(cfg.grid.t1) < 10.0)
    log << "spinsim: warning: h(T) = " << h(cfg.grid.t1)
        << " < 10; the horizon is short for the long-time limit\n";
  warn_if_coarse(cfg.grid, p, 1.0, log);

  std::vector<std::string> names;
  if (cols.rate) names.insert(names.end(), {"gap", "h_gap", "rate_normalized"});
  if (cols.l2) names.push_back("h_gap_sq");
  if (cols.tail) names.push_back("tail_exceed");
  if (names.empty()) throw std::invalid_argument("no long-time column selected");

  const Vec3 b = p.b;
  const double nb = norm(b);
  const double pref = rate_prefactor(p);
  const std::optional<TailSpec> tail = cols.tail;
  auto point = [&](const PathState& s, double* out) {
    const double gap = nb - dot(s.mu, b);
    const double ht = h(s.t);
    std::size_t i = 0;
    if (cols.rate) {
      out[i++] = gap;
      out[i++] = ht * gap;
      out[i++] = pref * std::sqrt(s.t) * gap;
    }
    if (cols.l2) out[i++] = ht * gap * gap;
    if (tail) out[i++] = std::pow(s.t, tail->beta) * gap >= tail->eta_thresh;
  };

  LongTimeResult res;
  res.limit = rate_limit(p);
  res.tail = tail;
  res.series = detail::record_ensemble(
      setup, cfg.grid, cfg.mu0, cfg.ensemble, names, {}, point,
      [](std::size_t, const PathState&, std::vector<double>&) {}, nullptr);
  return res;
}

inline LongTimeResult estimate_rate(const EnsembleConfig& cfg,
                                    std::ostream& log = std::cerr) {
  return long_time_study(cfg, {true, false, std::nullopt}, log);
}

inline LongTimeResult estimate_l2_decay(const EnsembleConfig& cfg,
                                        std::ostream& log = std::cerr) {
  return long_time_study(cfg, {false, true, std::nullopt}, log);
}

inline LongTimeResult tail_probability(const EnsembleConfig& cfg,
                                       double beta, double eta_thresh,
                                       std::ostream& log = std::cerr) {
  return long_time_study(cfg, {false, false, TailSpec{beta, eta_thresh}}, log);
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(double p_hat, std::size_t n, double z = 1.96) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p_hat + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// ---------------------------------------------------------------------------
// Stratonovich stationary regime

/// Derivative at t0 of the least-squares polynomial of the given degree
/// through (t, y), with t shifted to start at t0.
inline double fitted_initial_slope(const std::vector<double>& t,
                                   const std::vector<double>& y, double t0,
                                   int degree = 3) {
  if (t.size() != y.size() || t.size() <= static_cast<std::size_t>(degree))
    throw std::invalid_argument("not enough points for the slope fit");
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd v(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pw = 1.0;
    for (int j = 0; j <= degree; ++j) {
      v(i, j) = pw;
      pw *= t[static_cast<std::size_t>(i)] - t0;
    }
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = v.colPivHouseholderQr().solve(rhs);
  return c(1);
}

struct StratoResult {
  EnsembleSeries series;  // columns mu_dot_b, residual
  double fixed_point = 0.0;
  // cubic fit over the first time unit; empty when fewer than five
  // recorded points fall in the window
  std::optional<double> initial_slope;
  double slope_window = 1.0;
};

/// Stratonovich-mode ensemble. The residual column holds, per path,
/// alpha (|b|^2 - x^2) - eps^2 (alpha^2 + 1) x with x = mu . b; its mean is
/// the right-hand side of the ODE for E[x].
inline StratoResult strato_equilibrium(EnsembleConfig cfg,
                                       double slope_window = 1.0) {
  cfg.mode = Mode::StratonovichIto;
  const ModeSetup setup = cfg.setup();
  setup.validate(cfg.grid);
  require_unit(cfg.mu0);
  const ModelParams& p = cfg.params;
  const Vec3 b = p.b;
  const double nb2 = dot(b, b);
  const double c = p.noise_rate();

  StratoResult res;
  res.fixed_point = strato_fixed_point(p);
  res.slope_window = slope_window;
  res.series = detail::record_ensemble(
      setup, cfg.grid, cfg.mu0, cfg.ensemble, {"mu_dot_b", "residual"}, {},
      [&](const PathState& s, double* out) {
        const double x = dot(s.mu, b);
        out[0] = x;
        out[1] = p.alpha * (nb2 - x * x) - c * x;
      },
      [](std::size_t, const PathState&, std::vector<double>&) {}, nullptr);

  std::vector<double> ts, ys;
  const auto& mean = res.series.column("mu_dot_b").values;
  for (std::size_t i = 0; i < res.series.t.size(); ++i)
    if (res.series.t[i] <= cfg.grid.t0 + slope_window + 1e-12) {
      ts.push_back(res.series.t[i]);
      ys.push_back(mean[i].mean);
    }
  if (ts.size() > 4) res.initial_slope = fitted_initial_slope(ts, ys, cfg.grid.t0);
  return res;
}

// ---------------------------------------------------------------------------
// Hitting times of {mu . b <= delta} for the Stratonovich dynamics

struct HittingConfig {
  ModelParams params{1.0, 0.3, e3};
  std::optional<Vec3> mu0;  // default b / |b|
  double delta = 0.95;
  double t_max = 500.0;
  double dt = 0.01;
  std::size_t survival_stride = 100;  // survival curve every stride steps
  EnsembleOptions ensemble;

  Vec3 start() const { return mu0.value_or(params.b / norm(params.b)); }

  void validate() const {
    params.validate();
    const double l = strato_fixed_point(params);
    const double nb = norm(params.b);
    if (!(delta > l && delta < nb))
      throw std::invalid_argument(
          "delta must lie strictly between the fixed point " +
          std::to_string(l) + " and |b| = " + std::to_string(nb));
    require_unit(start());
    if (!(dot(start(), params.b) > delta))
      throw std::invalid_argument("initial state must satisfy mu0 . b > delta");
    if (survival_stride == 0)
      throw std::invalid_argument("survival_stride must be positive");
    GridSpec{0.0, t_max, dt}.validate();
  }
};

struct HittingSample {
  double tau = 0.0;  // t_max when censored
  bool censored = false;
};

struct HittingResult {
  std::vector<HittingSample> samples;  // successful paths, path order
  std::vector<PathError> failures;
  double l_threshold = 0.0;
  double censored_fraction = 0.0;
  double mean_lower_bound = 0.0;  // mean of censored samples <= E[tau]
  bool horizon_too_short = false;  // more than half censored
  std::vector<double> survival_t;
  std::vector<double> survival;    // P(tau > t)
};

inline HittingResult hitting_time(const HittingConfig& cfg) {
  cfg.validate();
  const GridSpec grid{0.0, cfg.t_max, cfg.dt, 1, true};
  const ModeSetup setup{Mode::StratonovichIto, ConstantField{cfg.params.b},
                        cfg.params};
  const Vec3 b = cfg.params.b;
  const Vec3 mu0 = cfg.start();

  EnsembleAccumulator acc =
      run_ensemble(cfg.ensemble, 0, [&](std::size_t, RngStream rng) {
        PathRecord r;
        r.scalars = {cfg.t_max, 1.0};
        PathState s(mu0, rng, 0.0);
        integrate_path(setup, grid, s, [&](std::size_t, const PathState& st) {
          if (dot(st.mu, b) <= cfg.delta) {
            r.scalars = {st.t, 0.0};
            return false;
          }
          return true;
        });
        return r;
      });

  HittingResult res;
  res.l_threshold = strato_fixed_point(cfg.params);
  res.failures = std::move(acc.failures);
  std::size_t n_cens = 0;
  double sum = 0.0;
  for (const auto& sc : acc.scalars) {
    const bool cens = sc[1] != 0.0;
    res.samples.push_back({sc[0], cens});
    n_cens += cens;
    sum += sc[0];
  }
  const double n = static_cast<double>(res.samples.size());
  if (n > 0) {
    res.censored_fraction = static_cast<double>(n_cens) / n;
    res.mean_lower_bound = sum / n;
  }
  res.horizon_too_short = res.censored_fraction > 0.5;

  std::vector<double> taus;
  for (const auto& s : res.samples) taus.push_back(s.censored ? std::numeric_limits<double>::infinity() : s.tau);
  std::sort(taus.begin(), taus.end());
  const std::size_t steps = grid.steps();
  for (std::size_t k = 0; k <= steps; k += cfg.survival_stride) {
    const double t = grid.time_at(k);
    const auto alive = taus.end() - std::upper_bound(taus.begin(), taus.end(), t);
    res.survival_t.push_back(t);
    res.survival.push_back(n > 0 ? static_cast<double>(alive) / n : 0.0);
  }
  return res;
}

/// True when t P(tau > t) is non-decreasing over [t_from, end] and ends
/// strictly above its starting value.
inline bool survival_grows_monotonically(const HittingResult& r, double t_from) {
  std::vector<double> v;
  for (std::size_t i = 0; i < r.survival_t.size(); ++i)
    if (r.survival_t[i] >= t_from) v.push_back(r.survival_t[i] * r.survival[i]);
  if (v.size() < 2) return false;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) return false;
  return v.back() > v.front();
}

// ---------------------------------------------------------------------------
// Hysteresis sweeps under b(t) = (1 - 2t) bhat

enum class Direction { Forward, Backward };

inline std::string_view to_string(Direction d) {
  return d == Direction::Forward ? "forward" : "backward";
}

struct HysteresisConfig {
  ModelParams params{1.0, 0.005, e3};  // params.b is unused; see bhat
  Vec3 bhat = e3;
  double eta = 0.01;
  Direction direction = Direction::Forward;
  GridSpec grid{0.0, 1.0, 1e-4, 10, true};
  std::optional<Vec3> lambda0;  // forward start, default bhat
  EnsembleOptions ensemble;

  /// The backward sweep is the forward sweep with bhat -> -bhat started at
  /// -bhat; the reported observable stays lambda . bhat.
  Vec3 ramp_direction() const {
    return direction == Direction::Forward ? bhat : -bhat;
  }
  Vec3 start() const {
    const Vec3 l0 = lambda0.value_or(bhat);
    return direction == Direction::Forward ? l0 : -l0;
  }
  ModeSetup setup() const {
    ModelParams p = params;
    p.b = ramp_direction();
    return {Mode::Hysteresis, LinearRamp{ramp_direction(), eta}, p};
  }
  void validate() const {
    if (std::abs(norm(bhat) - 1.0) > kUnitTolerance)
      throw std::invalid_argument("bhat must be a unit vector");
    setup().validate(grid);
    require_unit(start());
    warn_if_coarse(grid, setup().params, eta);
  }
};

struct HysteresisResult {
  Direction direction = Direction::Forward;
  EnsembleSeries series;       // column "lambda_dot_bhat"
  std::vector<double> bound;   // 1 / h^eta(t) per recorded time
  std::optional<double> crossing_time;
};

/// First recorded time where the aligned mean minus its stderr drops below
/// 1 / h^eta(t). The aligned mean is E[lambda . bhat] for the forward sweep
/// and its negative for the backward sweep.
inline std::optional<double> crossing_time(const EnsembleSeries& s,
                                           const std::vector<double>& bound,
                                           Direction d) {
  const auto& v = s.column("lambda_dot_bhat").values;
  const double sign = d == Direction::Forward ? 1.0 : -1.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (sign * v[i].mean - v[i].std_error() < bound[i]) return s.t[i];
  return std::nullopt;
}

inline HysteresisResult hysteresis_sweep(const HysteresisConfig& cfg) {
  cfg.validate();
  const ModeSetup setup = cfg.setup();
  const Vec3 ramp = cfg.ramp_direction();
  const double sign = cfg.direction == Direction::Forward ? 1.0 : -1.0;

  HysteresisResult res;
  res.direction = cfg.direction;
  res.series = detail::record_ensemble(
      setup, cfg.grid, cfg.start(), cfg.ensemble, {"lambda_dot_bhat"}, {},
      [&](const PathState& s, double* out) { out[0] = sign * dot(s.mu, ramp); },
      [](std::size_t, const PathState&, std::vector<double>&) {}, nullptr);
  for (double t : res.series.t)
    res.bound.push_back(hysteresis_bound(cfg.params, cfg.eta, t));
  res.crossing_time = crossing_time(res.series, res.bound, cfg.direction);
  return res;
}

/// Single-path sweep of lambda . bhat for the same path index as the
/// ensemble; it equals that path's contribution bit for bit.
inline RecordedSeries hysteresis_single_path(const HysteresisConfig& cfg,
                                             std::size_t path_index = 0) {
  cfg.validate();
  RecordedSeries r =
      run_path(cfg.setup(), cfg.grid, cfg.start(),
               RngStream(cfg.ensemble.seed, path_index), {Observable::MuDotB});
  if (cfg.direction == Direction::Backward)
    for (double& v : r.columns[0]) v = -v;
  return r;
}

}  // namespace spinsim
