// Euler-Maruyama time stepping on a uniform grid with per-step
// renormalization of the unit state.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "spinsim/dynamics.hpp"
#include "spinsim/geom3.hpp"
#include "spinsim/rng.hpp"

namespace spinsim {

enum class Mode { CoupledIto, NormalizedIto, StratonovichIto, Hysteresis };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::CoupledIto: return "coupled-ito";
    case Mode::NormalizedIto: return "normalized-ito";
    case Mode::StratonovichIto: return "stratonovich-ito";
    case Mode::Hysteresis: return "hysteresis";
  }
  return "?";
}

/// A path that could not be continued. Carries the time of the failing step.
class PathFailure : public std::runtime_error {
 public:
  PathFailure(const std::string& what, double t)
      : std::runtime_error(what + " at t = " + std::to_string(t)), t_(t) {}
  double t() const { return t_; }

 private:
  double t_;
};

struct GridSpec {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 0.01;
  std::size_t record_stride = 1;
  bool record_initial = true;

  std::size_t steps() const {
    return static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  }

  void validate() const {
    if (!std::isfinite(t0) || !std::isfinite(t1) || !(dt > 0.0))
      throw std::invalid_argument("grid needs finite t0, t1 and dt > 0");
    const double ratio = (t1 - t0) / dt;
    const double n = std::round(ratio);
    if (!(n >= 1.0) || std::abs(ratio - n) > 1e-9 * std::max(1.0, n))
      throw std::invalid_argument(
          "grid length must be a positive integer multiple of dt");
    if (record_stride == 0)
      throw std::invalid_argument("record_stride must be positive");
  }

  /// Grid time of step k; exact at both ends.
  double time_at(std::size_t k) const {
    const std::size_t n = steps();
    if (k == n) return t1;
    return t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n);
  }

  bool is_recorded(std::size_t k) const {
    if (k == 0) return record_initial;
    return k % record_stride == 0;
  }

  std::vector<double> recorded_times() const {
    std::vector<double> out;
    const std::size_t n = steps();
    for (std::size_t k = 0; k <= n; ++k)
      if (is_recorded(k)) out.push_back(time_at(k));
    return out;
  }
};

/// Emits a warning (stderr) when dt is not small against 1 / (alpha |b|).
/// Large steps are allowed; renormalization keeps the state on the sphere.
inline bool warn_if_coarse(const GridSpec& g, const ModelParams& p,
                           double time_scale = 1.0,
                           std::ostream& log = std::cerr) {
  const double rate = p.alpha * norm(p.b) / time_scale;
  if (rate > 0.0 && g.dt >= 1.0 / rate) {
    log << "spinsim: warning: dt = " << g.dt
        << " is not below the relaxation time " << 1.0 / rate << "\n";
    return true;
  }
  return false;
}

struct PathState {
  double t = 0.0;
  Vec3 y;   // unnormalized state, coupled mode only
  Vec3 mu;  // unit state
  RngStream rng;

  PathState(const Vec3& mu0, RngStream stream, double t0 = 0.0)
      : t(t0), y(mu0), mu(mu0), rng(stream) {}
};

inline Vec3 normalized_or_throw(const Vec3& v, double t) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n))
    throw PathFailure("state norm collapsed to " + std::to_string(n), t);
  return v / n;
}

// ---------------------------------------------------------------------------
// Single steps

/// One step of the coupled system: drift and diffusion are evaluated at mu,
/// y is never rescaled, mu is recomputed as y / |y|.
inline void step_coupled(PathState& s, const ModelParams& p, const Vec3& b,
                         double dt, const Vec3& dW) {
  const Vec3 y_next = s.y + dt * drift_Y(s.mu, b, p) + diffusion_Y(s.mu, p) * dW;
  const double t_next = s.t + dt;
  s.mu = normalized_or_throw(y_next, t_next);
  s.y = y_next;
  s.t = t_next;
}

inline void step_coupled(PathState& s, const ModelParams& p, const Vec3& b,
                         double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  step_coupled(s, p, b, dt, s.rng.increment(std::sqrt(dt)));
}

/// One step of mu' = renormalize(mu + drift dt + diffusion dW) for any model
/// exposing coefficients(mu, t).
template <class Model>
void step_normalized(PathState& s, const Model& model, double dt,
                     const Vec3& dW) {
  const Coefficients c = model.coefficients(s.mu, s.t);
  const Vec3 next = s.mu + dt * c.drift + c.diffusion * dW;
  const double t_next = s.t + dt;
  s.mu = normalized_or_throw(next, t_next);
  s.y = s.mu;
  s.t = t_next;
}

template <class Model>
void step_normalized(PathState& s, const Model& model, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  step_normalized(s, model, dt, s.rng.increment(std::sqrt(dt)));
}

// ---------------------------------------------------------------------------
// Path driver

/// Field used for a mode: constant b, or the ramp direction for hysteresis.
struct ModeSetup {
  Mode mode = Mode::NormalizedIto;
  FieldSchedule schedule = ConstantField{e3};
  ModelParams params;

  void validate(const GridSpec& g, bool allow_zero_damping = false) const {
    params.validate(allow_zero_damping);
    spinsim::validate(schedule);
    g.validate();
    const bool ramp = std::holds_alternative<LinearRamp>(schedule);
    if ((mode == Mode::Hysteresis) != ramp)
      throw std::invalid_argument(
          "hysteresis mode requires a linear ramp and only it does");
    if (ramp && (g.t0 < 0.0 || g.t1 > 1.0))
      throw std::invalid_argument("hysteresis grid must lie within [0, 1]");
  }

  /// Reference direction for alignment observables.
  Vec3 reference_field() const {
    if (const auto* r = std::get_if<LinearRamp>(&schedule)) return r->bhat;
    return std::get<ConstantField>(schedule).b;
  }

  /// Deterministic norm h(t) of the unnormalized state in this mode
  /// (1 for the Stratonovich model, which has no such state).
  double norm_profile(double t) const {
    switch (mode) {
      case Mode::CoupledIto:
      case Mode::NormalizedIto: return NormProfile::for_model(params)(t);
      case Mode::StratonovichIto: return 1.0;
      case Mode::Hysteresis:
        return NormProfile::rescaled(params,
                                     std::get<LinearRamp>(schedule).eta)(t);
    }
    return 1.0;
  }
};

/// Integrates one path over the grid. `observe(k, state)` is invoked at
/// k = 0 and after every step k; returning false stops the path early.
template <class Observer>
void integrate_path(const ModeSetup& setup, const GridSpec& grid,
                    PathState& s, Observer&& observe) {
  const std::size_t n = grid.steps();
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  s.t = grid.time_at(0);
  if (!observe(std::size_t{0}, std::as_const(s))) return;

  auto loop = [&](auto&& step) {
    for (std::size_t k = 1; k <= n; ++k) {
      const Vec3 dW = s.rng.increment(sqrt_dt);
      try {
        step(dW);
      } catch (const NonUnitState& e) {
        throw PathFailure(e.what(), s.t);
      }
      s.t = grid.time_at(k);
      if (!observe(k, std::as_const(s))) return;
    }
  };

  ModelParams p = setup.params;
  switch (setup.mode) {
    case Mode::CoupledIto: {
      const Vec3 b = std::get<ConstantField>(setup.schedule).b;
      p.b = b;
      loop([&](const Vec3& dW) { step_coupled(s, p, b, dt, dW); });
      break;
    }
    case Mode::NormalizedIto: {
      p.b = std::get<ConstantField>(setup.schedule).b;
      const NormalizedItoModel m(p);
      loop([&](const Vec3& dW) { step_normalized(s, m, dt, dW); });
      break;
    }
    case Mode::StratonovichIto: {
      p.b = std::get<ConstantField>(setup.schedule).b;
      const StratonovichModel m{p};
      loop([&](const Vec3& dW) { step_normalized(s, m, dt, dW); });
      break;
    }
    case Mode::Hysteresis: {
      const auto& r = std::get<LinearRamp>(setup.schedule);
      p.b = r.bhat;
      const HysteresisModel m{p, r.bhat, r.eta};
      loop([&](const Vec3& dW) { step_normalized(s, m, dt, dW); });
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Recorded series for a single path

enum class Observable { MuDotB, Mu1, Mu2, Mu3, YNorm };

inline std::string_view to_string(Observable o) {
  switch (o) {
    case Observable::MuDotB: return "mu_dot_b";
    case Observable::Mu1: return "mu1";
    case Observable::Mu2: return "mu2";
    case Observable::Mu3: return "mu3";
    case Observable::YNorm: return "y_norm";
  }
  return "?";
}

struct RecordedSeries {
  std::vector<double> t;
  std::vector<Observable> names;
  std::vector<std::vector<double>> columns;  // one per observable
};

inline double evaluate(Observable o, const PathState& s, const Vec3& ref) {
  switch (o) {
    case Observable::MuDotB: return dot(s.mu, ref);
    case Observable::Mu1: return s.mu.x1;
    case Observable::Mu2: return s.mu.x2;
    case Observable::Mu3: return s.mu.x3;
    case Observable::YNorm: return norm(s.y);
  }
  return 0.0;
}

/// Runs one path and returns the requested observables at every recorded
/// grid point. Deterministic in (rng.base_seed, rng.path_index).
inline RecordedSeries run_path(const ModeSetup& setup, const GridSpec& grid,
                               const Vec3& mu0, RngStream rng,
                               const std::vector<Observable>& observables) {
  setup.validate(grid, /*allow_zero_damping=*/true);
  require_unit(mu0);
  if (setup.mode != Mode::CoupledIto)
    for (Observable o : observables)
      if (o == Observable::YNorm)
        throw std::invalid_argument("y_norm is only defined in coupled mode");

  RecordedSeries out;
  out.names = observables;
  out.columns.resize(observables.size());
  const Vec3 ref = setup.reference_field();
  PathState s(mu0, rng, grid.t0);
  integrate_path(setup, grid, s, [&](std::size_t k, const PathState& st) {
    if (grid.is_recorded(k) && !observables.empty()) {
      out.t.push_back(st.t);
      for (std::size_t i = 0; i < observables.size(); ++i)
        out.columns[i].push_back(evaluate(observables[i], st, ref));
    }
    return true;
  });
  return out;
}

}  // namespace spinsim
