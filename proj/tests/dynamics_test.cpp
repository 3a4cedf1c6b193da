#include "spinsim/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using namespace spinsim;

Vec3 random_unit(std::mt19937_64& g) {
  std::normal_distribution<double> n;
  const Vec3 v{n(g), n(g), n(g)};
  return v / norm(v);
}

void expect_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x1, b.x1, tol);
  EXPECT_NEAR(a.x2, b.x2, tol);
  EXPECT_NEAR(a.x3, b.x3, tol);
}

const ModelParams kDefault{1.0, 0.1, e3};

// ---------------------------------------------------------------------------
// Parameters and schedules

TEST(ModelParams, Validation) {
  EXPECT_NO_THROW(kDefault.validate());
  EXPECT_THROW((ModelParams{0.0, 0.1, e3}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((ModelParams{0.0, 0.1, e3}.validate(true)));
  EXPECT_THROW((ModelParams{-1.0, 0.1, e3}.validate(true)), std::invalid_argument);
  EXPECT_THROW((ModelParams{1.0, 0.0, e3}.validate()), std::invalid_argument);
  EXPECT_THROW((ModelParams{1.0, 0.1, {}}.validate()), std::invalid_argument);
  EXPECT_THROW((ModelParams{NAN, 0.1, e3}.validate()), std::invalid_argument);
  EXPECT_DOUBLE_EQ(kDefault.noise_rate(), 0.02);
}

TEST(FieldSchedule, RampEvaluation) {
  const FieldSchedule ramp = LinearRamp{e1, 0.01};
  EXPECT_EQ(field_at(ramp, 0.0), e1);
  EXPECT_EQ(field_at(ramp, 0.5), (Vec3{}));
  EXPECT_EQ(field_at(ramp, 1.0), -e1);
  EXPECT_THROW(field_at(ramp, 1.5), std::domain_error);
  EXPECT_THROW(field_at(ramp, -0.1), std::domain_error);
  EXPECT_EQ(field_at(ConstantField{{0, 0, 2}}, 123.0), (Vec3{0, 0, 2}));
  EXPECT_THROW(validate(FieldSchedule{LinearRamp{{0, 0, 2}, 0.1}}),
               std::invalid_argument);
  EXPECT_THROW(validate(FieldSchedule{LinearRamp{e3, 0.0}}), std::invalid_argument);
  EXPECT_THROW(validate(FieldSchedule{ConstantField{{}}}), std::invalid_argument);
}

TEST(UnitCheck, RejectsNonUnitStates) {
  EXPECT_NO_THROW(require_unit(e1));
  EXPECT_NO_THROW(require_unit((1.0 + 5e-10) * e1));
  EXPECT_THROW(require_unit((1.0 + 1e-8) * e1), NonUnitState);
  EXPECT_THROW(require_unit(Vec3{}), NonUnitState);
  EXPECT_THROW(drift_Y({1, 1, 0}, e3, kDefault), NonUnitState);
  try {
    require_unit(2.0 * e2);
  } catch (const NonUnitState& e) {
    EXPECT_DOUBLE_EQ(e.norm(), 2.0);
  }
}

// ---------------------------------------------------------------------------
// Norm profile

TEST(NormProfile, ClosedFormValues) {
  const NormProfile h = NormProfile::for_model(kDefault);
  EXPECT_EQ(h(0.0), 1.0);
  EXPECT_NEAR(h(1.0), 1.019804, 1e-6);
  EXPECT_NEAR(h(1.0), std::sqrt(1.04), 1e-15);
  EXPECT_THROW(h(-1e-3), std::domain_error);
  for (double t : {0.0, 0.3, 7.0, 1e4})
    EXPECT_NEAR(h.derivative(t) * h(t), 0.02, 1e-15);
  // central difference of h matches the derivative
  for (double t : {0.5, 3.0, 40.0})
    EXPECT_NEAR((h(t + 1e-5) - h(t - 1e-5)) / 2e-5, h.derivative(t), 1e-8);
}

TEST(NormProfile, RescaledBoundAtHalf) {
  const ModelParams p{1.0, 0.005, e3};
  EXPECT_NEAR(hysteresis_bound(p, 0.01, 0.5), 0.99751, 1e-5);
  EXPECT_NEAR(hysteresis_bound(p, 0.01, 0.5), 1.0 / std::sqrt(1.005), 1e-15);
  EXPECT_EQ(hysteresis_bound(p, 0.01, 0.0), 1.0);
  const NormProfile h = NormProfile::rescaled(p, 0.01);
  EXPECT_NEAR(h.growth(), 2.0 * 0.005 * 0.005 / 0.01, 1e-18);
}

// ---------------------------------------------------------------------------
// Coupled system

TEST(DriftY, KnownValues) {
  expect_near(drift_Y(e1, e3, kDefault), {0, 1, 1}, 1e-15);
  expect_near(drift_Y(e3, e3, kDefault), {}, 0.0);
  expect_near(drift_Y(-e3, e3, kDefault), {}, 0.0);
  expect_near(drift_Y(e3, {0, 0, 2.5}, kDefault), {}, 0.0);
}

TEST(DriftY, IsTangent) {
  std::mt19937_64 g(3);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 mu = random_unit(g);
    const Vec3 b = 2.0 * random_unit(g);
    EXPECT_NEAR(dot(drift_Y(mu, b, {0.8, 0.1, b}), mu), 0.0, 1e-12);
  }
}

TEST(DiffusionY, KnownValuesAndKernel) {
  expect_near(diffusion_Y(e3, kDefault) * e1, {0.1, -0.1, 0.0}, 1e-16);
  std::mt19937_64 g(5);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 mu = random_unit(g);
    const ModelParams p{1.7, 0.3, e3};
    const Mat3 gm = diffusion_Y(mu, p);
    expect_near(gm * mu, {}, 1e-15);
    EXPECT_NEAR(trace(gm * transpose(gm)), 0.09 * (2.0 * 1.7 * 1.7 + 2.0), 1e-12);
  }
}

TEST(Amat, ZeroAndProductIdentity) {
  EXPECT_EQ(amat({}, 1.3), 1.3 * Mat3::identity());
  expect_near(amat(e3, 1.0) * e3, {}, 0.0);
  std::mt19937_64 g(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 mu = random_unit(g);
    const double a = 0.9;
    const Mat3 lhs = amat(mu, a) * transpose(amat(mu, a));
    const Mat3 rhs = (a * a) * Mat3::identity() - (a * a) * outer(mu, mu) +
                     lmat(mu) * transpose(lmat(mu));
    for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(lhs.a[k], rhs.a[k], 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Normalized SDE and the scalar observable

TEST(DriftMu, AlignedStateAtZero) {
  const NormProfile h = NormProfile::for_model(kDefault);
  expect_near(drift_mu(e3, 0.0, kDefault, h), -0.02 * e3, 1e-16);
  const Vec3 late = drift_mu(e3, 1e12, kDefault, h);
  EXPECT_LT(norm(late), 1e-12);
}

TEST(DriftMu, DefinitionByHand) {
  std::mt19937_64 g(9);
  const ModelParams p{0.6, 0.2, {0.3, -1.0, 0.5}};
  const NormProfile h = NormProfile::for_model(p);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 mu = random_unit(g);
    const double t = 10.0 * std::abs(mu.x1);
    const double ht = std::sqrt(2.0 * 0.04 * 1.36 * t + 1.0);
    const double dh = 0.04 * 1.36 / ht;
    const Vec3 c = cross(mu, p.b);
    const double mb = dot(mu, p.b);
    const Vec3 expected{-(mu.x1 * dh + c.x1 + 0.6 * (mu.x1 * mb - p.b.x1)) / ht,
                        -(mu.x2 * dh + c.x2 + 0.6 * (mu.x2 * mb - p.b.x2)) / ht,
                        -(mu.x3 * dh + c.x3 + 0.6 * (mu.x3 * mb - p.b.x3)) / ht};
    expect_near(drift_mu(mu, t, p, h), expected, 1e-14);
    const Mat3 d = diffusion_mu(mu, t, p, h);
    const Mat3 e = (0.2 / ht) * amat(mu, 0.6);
    for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(d.a[k], e.a[k], 1e-15);
  }
}

TEST(DriftScalar, KnownValues) {
  const NormProfile h = NormProfile::for_model(kDefault);
  EXPECT_NEAR(drift_scalar(0.0, e1, 0.0, kDefault, h), 1.0, 1e-15);
  const double t = 2.0;
  const double ratio = h.derivative(t) / h(t);
  EXPECT_NEAR(drift_scalar(1.0, e3, t, kDefault, h), -ratio, 1e-15);
  EXPECT_NEAR(drift_scalar(-1.0, -e3, t, kDefault, h), ratio, 1e-15);
  EXPECT_THROW(drift_scalar(0.5, e1, 0.0, kDefault, h), std::invalid_argument);
  EXPECT_THROW(drift_scalar(1.5, e3, 0.0, kDefault, h), std::invalid_argument);
}

TEST(DriftScalar, EqualsDriftMuProjectedOnB) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> ut(0.0, 1e3);
  const ModelParams p{1.3, 0.15, {0.2, 0.4, -0.9}};
  const NormProfile h = NormProfile::for_model(p);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 mu = random_unit(g);
    const double t = ut(g);
    EXPECT_NEAR(dot(drift_mu(mu, t, p, h), p.b),
                drift_scalar(dot(mu, p.b), mu, t, p, h), 1e-10);
  }
}

// ---------------------------------------------------------------------------
// Stratonovich model

TEST(Strato, AlignedDriftAndFixedPoint) {
  const Vec3 d = drift_strato_ito(e3, e3, kDefault);
  EXPECT_NEAR(dot(d, e3), -0.02, 1e-16);
  const ModelParams p2{1.0, 0.1, {0, 0, 2}};
  EXPECT_NEAR(dot(drift_strato_ito(e3, p2.b, p2), p2.b), -0.02 * 2.0, 1e-15);
  EXPECT_NEAR(strato_fixed_point(kDefault), 0.990050, 1e-6);
  // l solves l = alpha (|b|^2 - l^2) / c
  const double l = strato_fixed_point({0.7, 0.3, {0, 0, 1.5}});
  const double c = 0.09 * 1.49;
  EXPECT_NEAR(l, 0.7 * (2.25 - l * l) / c, 1e-12);
  EXPECT_NEAR(strato_fixed_point({1.0, 0.3, e3}), 0.914, 1e-3);
}

// d|mu|^2 = 2 mu . drift + trace(G G^T) vanishes for the Stratonovich model.
TEST(Strato, NormPreservation) {
  std::mt19937_64 g(13);
  const ModelParams p{0.8, 0.25, {1.0, 0.5, -0.2}};
  for (int i = 0; i < 1000; ++i) {
    const Vec3 mu = random_unit(g);
    const double md = dot(mu, drift_strato_ito(mu, p.b, p));
    EXPECT_NEAR(md + p.noise_rate(), 0.0, 1e-14);
    const Mat3 gm = diffusion_Y(mu, p);
    EXPECT_NEAR(2.0 * md + trace(gm * transpose(gm)), 0.0, 1e-13);
  }
}

// sum_{j,k} A_kj d_k A_ij, by central differences of amat off the sphere.
TEST(Strato, ItoCorrectionByFiniteDifferences) {
  std::mt19937_64 g(17);
  const double h = 1e-5;
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (int n = 0; n < 100; ++n) {
      const Vec3 x = random_unit(g);
      const Mat3 a = amat(x, alpha);
      Mat3 dA[3];
      for (std::size_t k = 0; k < 3; ++k) {
        Vec3 xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        dA[k] = (1.0 / (2.0 * h)) * (amat(xp, alpha) - amat(xm, alpha));
      }
      Vec3 corr;
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          for (std::size_t k = 0; k < 3; ++k) corr[i] += a(k, j) * dA[k](i, j);
      expect_near(corr, -2.0 * (alpha * alpha + 1.0) * x, 1e-6);
    }
  }
}

// ---------------------------------------------------------------------------
// Hysteresis system

TEST(Hysteresis, FieldVanishesAtHalf) {
  const ModelParams p{1.0, 0.01, e3};
  const double eta = 3.1e-5;
  const NormProfile h = NormProfile::rescaled(p, eta);
  std::mt19937_64 g(19);
  for (int i = 0; i < 100; ++i) {
    const Vec3 l = random_unit(g);
    expect_near(drift_hysteresis(l, 0.5, e3, p, eta),
                -(h.derivative(0.5) / h(0.5)) * l, 1e-12);
  }
}

TEST(Hysteresis, StartMatchesNormalizedDrift) {
  const ModelParams p{1.0, 0.005, e3};
  const double eta = 0.01;
  // At t = 0 the field is bhat; the 1/eta factor scales it to bhat / eta.
  const ModelParams scaled{1.0, 0.005, e3 / eta};
  std::mt19937_64 g(23);
  for (int i = 0; i < 100; ++i) {
    const Vec3 l = random_unit(g);
    const Vec3 a = drift_hysteresis(l, 0.0, e3, p, eta);
    const Vec3 b = drift_mu(l, 0.0, scaled, NormProfile::rescaled(p, eta));
    expect_near(a, b, 1e-12);
    const Mat3 d = diffusion_hysteresis(l, 0.0, p, eta);
    const Mat3 e = (0.005 / std::sqrt(eta)) * amat(l, 1.0);
    for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(d.a[k], e.a[k], 1e-15);
  }
  EXPECT_THROW(drift_hysteresis(e3, 1.01, e3, p, eta), std::domain_error);
  EXPECT_THROW(diffusion_hysteresis(e3, -0.01, p, eta), std::domain_error);
}

// ---------------------------------------------------------------------------
// Models: the fused coefficients agree bit for bit with drift/diffusion.

template <class Model>
void expect_fused_consistent(const Model& m, double t_scale) {
  std::mt19937_64 g(29);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 mu = random_unit(g);
    const double t = t_scale * std::abs(mu.x2);
    const Coefficients c = m.coefficients(mu, t);
    EXPECT_EQ(c.drift, m.drift(mu, t));
    EXPECT_EQ(c.diffusion, m.diffusion(mu, t));
  }
}

TEST(Models, FusedCoefficientsMatch) {
  const ModelParams p{0.7, 0.2, {0.1, 0.2, 1.1}};
  expect_fused_consistent(NormalizedItoModel(p), 50.0);
  expect_fused_consistent(StratonovichModel{p}, 50.0);
  expect_fused_consistent(HysteresisModel{p, e3, 0.01}, 1.0);
}

}  // namespace
