#include "spinsim/integrator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace {

using namespace spinsim;

const Vec3 kDW{0.01, -0.02, 0.005};

// Straight-line cross product, kept separate from the library's.
Vec3 wedge(const Vec3& a, const Vec3& b) {
  return {a.x2 * b.x3 - a.x3 * b.x2, a.x3 * b.x1 - a.x1 * b.x3,
          a.x1 * b.x2 - a.x2 * b.x1};
}

void expect_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x1, b.x1, tol);
  EXPECT_NEAR(a.x2, b.x2, tol);
  EXPECT_NEAR(a.x3, b.x3, tol);
}

// ---------------------------------------------------------------------------
// Single-step oracles: mu0 = e1, b = e3, alpha = 1, eps = 0.1, dt = 0.01.

TEST(SingleStep, Coupled) {
  const double alpha = 1.0, eps = 0.1, dt = 0.01;
  const Vec3 mu{1, 0, 0}, b{0, 0, 1};
  const Vec3 edw{eps * kDW.x1, eps * kDW.x2, eps * kDW.x3};
  const Vec3 mb = wedge(mu, b), mmb = wedge(mu, mb);
  const Vec3 mw = wedge(mu, edw), mmw = wedge(mu, mw);
  Vec3 y;
  for (std::size_t k = 0; k < 3; ++k)
    y[k] = mu[k] + dt * (-mb[k] - alpha * mmb[k]) + (-mw[k] - alpha * mmw[k]);

  PathState s(e1, RngStream(0, 0));
  step_coupled(s, {alpha, eps, b}, b, dt, kDW);
  expect_near(s.y, y, 1e-14);
  expect_near(s.mu, y / std::sqrt(y.x1 * y.x1 + y.x2 * y.x2 + y.x3 * y.x3), 1e-14);
  EXPECT_DOUBLE_EQ(s.t, dt);
  // By hand: y = (1, 0.01 - 0.0015, 0.01 + 0.0025)
  expect_near(s.y, {1.0, 0.0085, 0.0125}, 1e-14);
}

TEST(SingleStep, Normalized) {
  const double alpha = 1.0, eps = 0.1, dt = 0.01, c = eps * eps * 2.0;
  const Vec3 mu{1, 0, 0}, b{0, 0, 1};
  const double h0 = 1.0, dh0 = c / h0;
  const Vec3 mb = wedge(mu, b);
  const double mdb = mu.x1 * b.x1 + mu.x2 * b.x2 + mu.x3 * b.x3;
  const Vec3 edw{eps * kDW.x1, eps * kDW.x2, eps * kDW.x3};
  const Vec3 mw = wedge(mu, edw), mmw = wedge(mu, mw);
  Vec3 next;
  for (std::size_t k = 0; k < 3; ++k) {
    const double drift = -(mu[k] * dh0 + mb[k] + alpha * (mu[k] * mdb - b[k])) / h0;
    next[k] = mu[k] + dt * drift + (-mw[k] - alpha * mmw[k]) / h0;
  }
  const Vec3 expected = next / std::sqrt(next.x1 * next.x1 + next.x2 * next.x2 +
                                         next.x3 * next.x3);

  PathState s(e1, RngStream(0, 0));
  step_normalized(s, NormalizedItoModel({alpha, eps, b}), dt, kDW);
  expect_near(s.mu, expected, 1e-14);
  EXPECT_EQ(s.y, s.mu);
}

TEST(SingleStep, Stratonovich) {
  const double alpha = 1.0, eps = 0.1, dt = 0.01, c = eps * eps * 2.0;
  const Vec3 mu{1, 0, 0}, b{0, 0, 1};
  const Vec3 mb = wedge(mu, b), mmb = wedge(mu, mb);
  const Vec3 edw{eps * kDW.x1, eps * kDW.x2, eps * kDW.x3};
  const Vec3 mw = wedge(mu, edw), mmw = wedge(mu, mw);
  Vec3 next;
  for (std::size_t k = 0; k < 3; ++k)
    next[k] = mu[k] + dt * (-mb[k] - alpha * mmb[k] - c * mu[k]) +
              (-mw[k] - alpha * mmw[k]);
  PathState s(e1, RngStream(0, 0));
  step_normalized(s, StratonovichModel{{alpha, eps, b}}, dt, kDW);
  expect_near(s.mu, next / norm(next), 1e-14);
}

// ---------------------------------------------------------------------------
// Deterministic behaviour with zero increments

TEST(Step, AlignedStateIsFixedWithoutNoise) {
  PathState s(e3, RngStream(0, 0));
  for (int i = 0; i < 100; ++i) step_coupled(s, {1.0, 0.1, e3}, e3, 0.01, {});
  EXPECT_EQ(s.y, e3);
  EXPECT_EQ(s.mu, e3);
}

TEST(Step, AlignmentIncreasesWithoutNoise) {
  PathState s(e1, RngStream(0, 0));
  double prev = dot(s.mu, e3);
  for (int i = 0; i < 500; ++i) {
    step_coupled(s, {1.0, 0.1, e3}, e3, 0.01, {});
    const double now = dot(s.mu, e3);
    EXPECT_GT(now, prev);
    prev = now;
  }
}

struct ZeroModel {
  Coefficients coefficients(const Vec3&, double) const { return {}; }
};

TEST(Step, ZeroFieldsLeaveStateUnchanged) {
  const Vec3 mu = Vec3{1, 2, 2} / 3.0;
  PathState s(mu, RngStream(0, 0));
  step_normalized(s, ZeroModel{}, 0.1, {0.3, -0.1, 0.2});
  EXPECT_EQ(s.mu, mu / norm(mu));
}

TEST(Step, RejectsNonPositiveDt) {
  PathState s(e1, RngStream(0, 0));
  EXPECT_THROW(step_coupled(s, {1.0, 0.1, e3}, e3, 0.0), std::invalid_argument);
  EXPECT_THROW(step_normalized(s, StratonovichModel{{1.0, 0.1, e3}}, -0.1),
               std::invalid_argument);
}

TEST(Step, CollapsedStateIsAPathFailure) {
  EXPECT_THROW(normalized_or_throw({}, 1.0), PathFailure);
  EXPECT_THROW(normalized_or_throw({NAN, 0, 0}, 1.0), PathFailure);
  try {
    normalized_or_throw({}, 2.5);
  } catch (const PathFailure& e) {
    EXPECT_EQ(e.t(), 2.5);
  }
}

TEST(Step, UnitNormAfterEveryStep) {
  for (Mode m : {Mode::CoupledIto, Mode::NormalizedIto, Mode::StratonovichIto}) {
    const ModeSetup setup{m, ConstantField{{0.3, 0.0, 1.2}}, {0.5, 0.4, e3}};
    const GridSpec g{0.0, 20.0, 0.05, 1, true};
    PathState s(-e1, RngStream(5, 0));
    const double nb = norm(Vec3{0.3, 0.0, 1.2});
    integrate_path(setup, g, s, [&](std::size_t, const PathState& st) {
      EXPECT_NEAR(norm(st.mu), 1.0, 4e-16);
      EXPECT_LE(std::abs(dot(st.mu, Vec3{0.3, 0.0, 1.2})), nb + 1e-9);
      return true;
    });
  }
}

// ---------------------------------------------------------------------------
// Grid

TEST(Grid, Validation) {
  EXPECT_NO_THROW((GridSpec{0.0, 1.0, 0.01}.validate()));
  EXPECT_THROW((GridSpec{0.0, 1.0, 0.3}.validate()), std::invalid_argument);
  EXPECT_THROW((GridSpec{0.0, 1.0, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((GridSpec{1.0, 0.0, 0.1}.validate()), std::invalid_argument);
  EXPECT_THROW((GridSpec{0.0, 1.0, 0.1, 0}.validate()), std::invalid_argument);
  const GridSpec g{0.0, 1e4, 0.01, 100};
  EXPECT_EQ(g.steps(), 1000000u);
  EXPECT_EQ(g.time_at(g.steps()), 1e4);
  EXPECT_EQ(g.recorded_times().size(), 10001u);
  EXPECT_EQ(g.recorded_times()[1], 1.0);
}

TEST(Grid, CoarseStepWarning) {
  std::ostringstream log;
  EXPECT_TRUE(warn_if_coarse({0.0, 10.0, 2.0}, {1.0, 0.1, e3}, 1.0, log));
  EXPECT_NE(log.str().find("warning"), std::string::npos);
  std::ostringstream quiet;
  EXPECT_FALSE(warn_if_coarse({0.0, 10.0, 0.01}, {1.0, 0.1, e3}, 1.0, quiet));
  EXPECT_TRUE(quiet.str().empty());
  // A coarse step still integrates and keeps |mu| = 1.
  const auto r = run_path({Mode::NormalizedIto, ConstantField{e3}, {1.0, 0.1, e3}},
                          {0.0, 10.0, 2.0}, -e1, RngStream(1, 0),
                          {Observable::Mu1, Observable::Mu2, Observable::Mu3});
  for (std::size_t i = 0; i < r.t.size(); ++i)
    EXPECT_NEAR(std::hypot(r.columns[0][i], r.columns[1][i], r.columns[2][i]),
                1.0, 1e-15);
}

// ---------------------------------------------------------------------------
// run_path

TEST(RunPath, ModeScheduleCompatibility) {
  const GridSpec g{0.0, 1.0, 0.01};
  EXPECT_THROW(run_path({Mode::Hysteresis, ConstantField{e3}, {}}, g, e3,
                        RngStream(1, 0), {Observable::MuDotB}),
               std::invalid_argument);
  EXPECT_THROW(run_path({Mode::NormalizedIto, LinearRamp{e3, 0.1}, {}}, g, e3,
                        RngStream(1, 0), {Observable::MuDotB}),
               std::invalid_argument);
  EXPECT_THROW(run_path({Mode::Hysteresis, LinearRamp{e3, 0.1}, {}},
                        {0.0, 2.0, 0.01}, e3, RngStream(1, 0), {Observable::MuDotB}),
               std::invalid_argument);
  EXPECT_THROW(run_path({Mode::NormalizedIto, ConstantField{e3}, {}}, g, e3,
                        RngStream(1, 0), {Observable::YNorm}),
               std::invalid_argument);
  EXPECT_THROW(run_path({Mode::NormalizedIto, ConstantField{e3}, {}}, g, 2.0 * e3,
                        RngStream(1, 0), {Observable::MuDotB}),
               NonUnitState);
}

TEST(RunPath, EmptyRecordingIsNotAnError) {
  const auto r = run_path({Mode::CoupledIto, ConstantField{e3}, {}},
                          {0.0, 1.0, 0.01, 1000, false}, e1, RngStream(1, 0),
                          {Observable::MuDotB});
  EXPECT_TRUE(r.t.empty());
  EXPECT_TRUE(r.columns[0].empty());
  const auto none = run_path({Mode::CoupledIto, ConstantField{e3}, {}},
                             {0.0, 1.0, 0.01}, e1, RngStream(1, 0), {});
  EXPECT_TRUE(none.t.empty());
}

TEST(RunPath, SeedsDetermineThePath) {
  const ModeSetup setup{Mode::NormalizedIto, ConstantField{e3}, {1.0, 0.1, e3}};
  const GridSpec g{0.0, 5.0, 0.01, 10};
  const auto a = run_path(setup, g, -e3, RngStream(7, 0), {Observable::MuDotB});
  const auto b = run_path(setup, g, -e3, RngStream(7, 0), {Observable::MuDotB});
  const auto c = run_path(setup, g, -e3, RngStream(8, 0), {Observable::MuDotB});
  EXPECT_EQ(a.columns, b.columns);
  EXPECT_NE(a.columns, c.columns);
  EXPECT_EQ(a.t.size(), 51u);
}

TEST(RunPath, CoupledNormTracksClosedForm) {
  const ModeSetup setup{Mode::CoupledIto, ConstantField{e3}, {1.0, 0.1, e3}};
  const auto r = run_path(setup, {0.0, 10.0, 0.01, 100}, -e3, RngStream(3, 0),
                          {Observable::YNorm});
  const NormProfile h = NormProfile::for_model(setup.params);
  for (std::size_t i = 0; i < r.t.size(); ++i)
    EXPECT_NEAR(r.columns[0][i], h(r.t[i]), 0.05);
}

// Coupled and normalized schemes discretize the same process and draw the
// same increments.
TEST(RunPath, CoupledAndNormalizedAgreePathwise) {
  const ModelParams p{1.0, 0.1, e3};
  const GridSpec g{0.0, 10.0, 0.01, 1};
  for (std::uint64_t path = 0; path < 5; ++path) {
    const auto c = run_path({Mode::CoupledIto, ConstantField{e3}, p}, g, -e3 + Vec3{},
                            RngStream(11, path),
                            {Observable::Mu1, Observable::Mu2, Observable::Mu3});
    const auto n = run_path({Mode::NormalizedIto, ConstantField{e3}, p}, g, -e3,
                            RngStream(11, path),
                            {Observable::Mu1, Observable::Mu2, Observable::Mu3});
    double worst = 0.0;
    for (std::size_t i = 0; i < c.t.size(); ++i)
      for (std::size_t k = 0; k < 3; ++k)
        worst = std::max(worst, std::abs(c.columns[k][i] - n.columns[k][i]));
    EXPECT_LE(worst, 10.0 * g.dt) << "path " << path;
  }
}

TEST(RunPath, StratonovichInitialDecay) {
  // E[mu . b] leaves the pole at rate eps^2 (alpha^2 + 1) |b|. The window
  // is short against the restoring rate 2 alpha |b|.
  const ModelParams p{1.0, 0.1, {0, 0, 2}};
  const ModeSetup setup{Mode::StratonovichIto, ConstantField{p.b}, p};
  const GridSpec g{0.0, 0.01, 0.001, 10};
  double sum = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i)
    sum += run_path(setup, g, e3, RngStream(17, i), {Observable::MuDotB}).columns[0].back();
  const double slope = (sum / n - 2.0) / 0.01;
  EXPECT_NEAR(slope, -0.02 * 2.0, 0.1 * 0.04);
}

}  // namespace
