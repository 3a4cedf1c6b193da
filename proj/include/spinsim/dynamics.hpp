// Drift and diffusion fields of the stochastic Landau-Lifshitz model.
//
// Four formulations share the same building blocks:
//   * the coupled Itô system for the unnormalized state y (mu = y / |y|),
//   * the autonomous Itô SDE for mu obtained by dividing by the
//     deterministic norm h(t),
//   * the Stratonovich model rewritten in Itô form,
//   * the rescaled hysteresis system driven by a linear field ramp.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "spinsim/geom3.hpp"

namespace spinsim {

inline constexpr double kUnitTolerance = 1e-9;

/// Thrown when a state that must lie on the unit sphere does not.
class NonUnitState : public std::domain_error {
 public:
  explicit NonUnitState(double n)
      : std::domain_error("state is not a unit vector (|mu| = " +
                          std::to_string(n) + ")"),
        norm_(n) {}
  double norm() const { return norm_; }

 private:
  double norm_;
};

inline void require_unit(const Vec3& mu) {
  const double n2 = dot(mu, mu);
  // Cheap squared-norm screen first; only take the root near the boundary.
  if (std::abs(n2 - 1.0) < 1.9e-9) return;
  const double n = std::sqrt(n2);
  if (!(std::abs(n - 1.0) <= kUnitTolerance)) throw NonUnitState(n);
}

struct ModelParams {
  double alpha = 1.0;  // damping
  double eps = 0.1;    // noise magnitude
  Vec3 b = e3;         // external field

  /// eps^2 (alpha^2 + 1)
  double noise_rate() const { return eps * eps * (alpha * alpha + 1.0); }

  /// Throws std::invalid_argument unless alpha > 0, eps > 0 and |b| > 0.
  /// `allow_zero_damping` admits alpha == 0 for the precession-only check.
  void validate(bool allow_zero_damping = false) const {
    if (!std::isfinite(alpha) || !std::isfinite(eps) || !is_finite(b))
      throw std::invalid_argument("model parameters must be finite");
    if (allow_zero_damping ? !(alpha >= 0.0) : !(alpha > 0.0))
      throw std::invalid_argument("alpha must be > 0 (got " +
                                  std::to_string(alpha) + ")");
    if (!(eps > 0.0))
      throw std::invalid_argument("eps must be > 0 (got " +
                                  std::to_string(eps) + ")");
    if (!(norm(b) > 0.0))
      throw std::invalid_argument("external field b must be non-zero");
  }
};

// ---------------------------------------------------------------------------
// Field schedules

struct ConstantField {
  Vec3 b;
};

/// b(t) = (1 - 2t) bhat on rescaled time t in [0, 1].
struct LinearRamp {
  Vec3 bhat;
  double eta;
};

using FieldSchedule = std::variant<ConstantField, LinearRamp>;

inline void validate(const FieldSchedule& s) {
  if (const auto* r = std::get_if<LinearRamp>(&s)) {
    if (std::abs(norm(r->bhat) - 1.0) > kUnitTolerance)
      throw std::invalid_argument("ramp direction must be a unit vector");
    if (!(r->eta > 0.0)) throw std::invalid_argument("ramp eta must be > 0");
  } else {
    if (!(norm(std::get<ConstantField>(s).b) > 0.0))
      throw std::invalid_argument("constant field must be non-zero");
  }
}

inline Vec3 field_at(const FieldSchedule& s, double t) {
  if (const auto* r = std::get_if<LinearRamp>(&s)) {
    if (t < 0.0 || t > 1.0)
      throw std::domain_error("ramp time outside [0, 1]");
    return (1.0 - 2.0 * t) * r->bhat;
  }
  return std::get<ConstantField>(s).b;
}

// ---------------------------------------------------------------------------
// Deterministic norm of the unnormalized state

/// h(t) = sqrt(2 eps^2 (alpha^2 + 1) t / eta + 1), with eta = 1 when absent.
struct NormProfile {
  double eps = 0.1;
  double alpha = 1.0;
  std::optional<double> eta;

  static NormProfile for_model(const ModelParams& p) {
    return {p.eps, p.alpha, std::nullopt};
  }
  static NormProfile rescaled(const ModelParams& p, double eta) {
    return {p.eps, p.alpha, eta};
  }

  /// h'(t) * h(t), constant in time.
  double growth() const {
    const double g = eps * eps * (alpha * alpha + 1.0);
    return eta ? g / *eta : g;
  }

  double operator()(double t) const {
    if (t < 0.0) throw std::domain_error("norm profile evaluated at t < 0");
    return std::sqrt(2.0 * growth() * t + 1.0);
  }

  double derivative(double t) const { return growth() / (*this)(t); }
};

// ---------------------------------------------------------------------------
// Coupled Itô system

/// dt part of dY: -mu ∧ b - alpha mu ∧ (mu ∧ b).
inline Vec3 drift_Y(const Vec3& mu, const Vec3& b, const ModelParams& p) {
  require_unit(mu);
  const Vec3 mxb = cross(mu, b);
  return -mxb - p.alpha * cross(mu, mxb);
}

/// eps * A(mu); applied to dW it gives -mu ∧ eps dW - alpha mu ∧ (mu ∧ eps dW).
inline Mat3 diffusion_Y(const Vec3& mu, const ModelParams& p) {
  require_unit(mu);
  return p.eps * amat(mu, p.alpha);
}

// ---------------------------------------------------------------------------
// Autonomous Itô SDE for mu

inline Vec3 drift_mu(const Vec3& mu, double t, const ModelParams& p,
                     const NormProfile& h) {
  require_unit(mu);
  const double ht = h(t);
  const double dh = h.growth() / ht;
  const Vec3 v = dh * mu + cross(mu, p.b) + p.alpha * (dot(mu, p.b) * mu - p.b);
  return -(1.0 / ht) * v;
}

inline Mat3 diffusion_mu(const Vec3& mu, double t, const ModelParams& p,
                         const NormProfile& h) {
  require_unit(mu);
  return (p.eps / h(t)) * amat(mu, p.alpha);
}

/// Drift of the scalar observable mu . b. Kept as an oracle for drift_mu;
/// the scalar equation is not closed and is never integrated on its own.
inline double drift_scalar(double mdotb, const Vec3& mu, double t,
                           const ModelParams& p, const NormProfile& h) {
  const double nb = norm(p.b);
  if (std::abs(mdotb) > nb + 1e-9 || std::abs(mdotb - dot(mu, p.b)) > 1e-9)
    throw std::invalid_argument("mdotb inconsistent with mu . b");
  const double ht = h(t);
  const double dh = h.growth() / ht;
  return -mdotb * dh / ht - (p.alpha / ht) * (mdotb * mdotb - nb * nb);
}

// ---------------------------------------------------------------------------
// Stratonovich model in Itô form

/// A(mu) b - eps^2 (alpha^2 + 1) mu. The diffusion is eps * A(mu).
inline Vec3 drift_strato_ito(const Vec3& mu, const Vec3& b,
                             const ModelParams& p) {
  require_unit(mu);
  return amat(mu, p.alpha) * b - p.noise_rate() * mu;
}

/// Root in [-|b|, |b|] of l = alpha (|b|^2 - l^2) / (eps^2 (alpha^2 + 1)).
inline double strato_fixed_point(const ModelParams& p) {
  const double nb = norm(p.b);
  const double c = p.noise_rate() / p.alpha;
  return 0.5 * (std::sqrt(4.0 * nb * nb + c * c) - c);
}

// ---------------------------------------------------------------------------
// Rescaled hysteresis system on t in [0, 1]

inline void require_ramp_time(double t) {
  if (t < 0.0 || t > 1.0)
    throw std::domain_error("hysteresis time " + std::to_string(t) +
                            " outside [0, 1]");
}

/// Drift of lambda under b(t) = (1 - 2t) bhat with the norm profile h^eta.
inline Vec3 drift_hysteresis(const Vec3& lambda, double t, const Vec3& bhat,
                             const ModelParams& p, double eta) {
  require_ramp_time(t);
  require_unit(lambda);
  const NormProfile h = NormProfile::rescaled(p, eta);
  const double ht = h(t);
  const double dh = h.growth() / ht;
  const Vec3 bt = (1.0 - 2.0 * t) * bhat;
  const Vec3 field_part =
      cross(lambda, bt) + p.alpha * (dot(lambda, bt) * lambda - bt);
  return -(1.0 / ht) * (dh * lambda + (1.0 / eta) * field_part);
}

inline Mat3 diffusion_hysteresis(const Vec3& lambda, double t,
                                 const ModelParams& p, double eta) {
  require_ramp_time(t);
  require_unit(lambda);
  const NormProfile h = NormProfile::rescaled(p, eta);
  return (p.eps / (std::sqrt(eta) * h(t))) * amat(lambda, p.alpha);
}

/// Lower bound on the mean alignment during the forward sweep (t <= 1/2).
inline double hysteresis_bound(const ModelParams& p, double eta, double t) {
  return 1.0 / NormProfile::rescaled(p, eta)(t);
}

// ---------------------------------------------------------------------------
// Models consumed by the integrator: drift(mu, t) and diffusion(mu, t), plus
// coefficients(mu, t) evaluating both at once (one unit check, one h(t)).
// Both paths perform the same floating-point operations.

struct Coefficients {
  Vec3 drift;
  Mat3 diffusion;
};

struct NormalizedItoModel {
  ModelParams params;
  NormProfile profile;

  explicit NormalizedItoModel(const ModelParams& p)
      : params(p), profile(NormProfile::for_model(p)) {}

  Vec3 drift(const Vec3& mu, double t) const {
    return drift_mu(mu, t, params, profile);
  }
  Mat3 diffusion(const Vec3& mu, double t) const {
    return diffusion_mu(mu, t, params, profile);
  }

  Coefficients coefficients(const Vec3& mu, double t) const {
    require_unit(mu);
    const double ht = profile(t);
    const double dh = profile.growth() / ht;
    const Vec3 v = dh * mu + cross(mu, params.b) +
                   params.alpha * (dot(mu, params.b) * mu - params.b);
    return {-(1.0 / ht) * v, (params.eps / ht) * amat(mu, params.alpha)};
  }
};

struct StratonovichModel {
  ModelParams params;

  Vec3 drift(const Vec3& mu, double) const {
    return drift_strato_ito(mu, params.b, params);
  }
  Mat3 diffusion(const Vec3& mu, double) const {
    return diffusion_Y(mu, params);
  }

  Coefficients coefficients(const Vec3& mu, double) const {
    require_unit(mu);
    const Mat3 a = amat(mu, params.alpha);
    return {a * params.b - params.noise_rate() * mu, params.eps * a};
  }
};

struct HysteresisModel {
  ModelParams params;
  Vec3 bhat;
  double eta;

  Vec3 drift(const Vec3& lambda, double t) const {
    return drift_hysteresis(lambda, t, bhat, params, eta);
  }
  Mat3 diffusion(const Vec3& lambda, double t) const {
    return diffusion_hysteresis(lambda, t, params, eta);
  }

  Coefficients coefficients(const Vec3& lambda, double t) const {
    return {drift(lambda, t), diffusion(lambda, t)};
  }
};

}  // namespace spinsim
