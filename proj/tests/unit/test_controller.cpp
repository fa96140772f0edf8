#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "flatpmp/controller.hpp"
#include "test_support.hpp"

namespace flatpmp {
namespace {

using std::numbers::pi;

WeightSet steering_weights() {
  return WeightSet::from_qbar_m(10.0 * Mat2::Identity(), Mat2::Identity());
}

TrackingState tracking_state(const FlatSystemDescriptor& s, const Vec3& x, const Vec2& e,
                             const Vec2& edot) {
  const OutputLieData d = output_lie_data(s.g1, s.g2, s.phi, x);
  TrackingState ts;
  ts.e = e;
  ts.edot = edot;
  ts.Lg1phi = d.Lg1phi;
  ts.Lbphi = d.Lbphi;
  ts.Lg1sqphi = d.Lg1sq_phi;
  return ts;
}

// A state on the reference whose heading matches the reference velocity, so
// e = 0 and edot = 0 under the law's u1.
Vec3 on_reference(const ReferenceSignal& r, double t) {
  const ReferenceSample s = r(t);
  return {s.y[0], s.y[1], std::atan2(s.dy[0], s.dy[1])};
}

TEST(Costate, ZeroErrorGivesZero) {
  EXPECT_EQ(costate(Vec2::Zero(), steering_weights(), steerable_axle().phi.jacobian(Vec3::Zero())),
            Vec3::Zero());
}

TEST(Costate, AxleUnitError) {
  const Vec3 l = costate(Vec2(1, 0), steering_weights(),
                         steerable_axle().phi.jacobian(Vec3(0.1, 0.2, 0.3)));
  EXPECT_EQ(l, Vec3(-10, 0, 0));
}

TEST(Costate, OrthogonalToSteeringField) {
  const FlatSystemDescriptor s = steerable_axle();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (const Vec3& x : test::random_states(100)) {
    const Vec3 l = costate(Vec2(n(rng), n(rng)), steering_weights(), s.phi.jacobian(x));
    EXPECT_EQ(l[2], 0.0);
    EXPECT_EQ(l.dot(s.g2.eval(x)), 0.0);
  }
}

TEST(U1Singular, ZeroErrorAndVelocity) {
  EXPECT_EQ(u1_singular(Vec2::Zero(), Vec2(0.6, 0.8), Vec2::Zero(), steering_weights()), 0.0);
}

TEST(U1Singular, AxleFeedforward) {
  const Vec2 dy(0.7, -1.3);
  for (double th : {0.0, 0.4, 2.0, -1.1}) {
    const Vec2 Lg1(std::sin(th), std::cos(th));
    EXPECT_NEAR(u1_singular(Vec2::Zero(), Lg1, dy, steering_weights()),
                dy[0] * std::sin(th) + dy[1] * std::cos(th), 1e-15);
  }
}

TEST(U1Singular, AxleErrorFeedback) {
  const Vec2 Lg1(std::sin(pi / 2), std::cos(pi / 2));
  EXPECT_NEAR(u1_singular(Vec2(1, 0), Lg1, Vec2::Zero(), steering_weights()), 10.0, 1e-14);
}

TEST(U1Singular, ThrowsWhenLegendreClebschFails) {
  EXPECT_THROW(u1_singular(Vec2(1, 0), Vec2::Zero(), Vec2::Zero(), steering_weights()),
               LegendreClebschViolated);
}

TEST(U1Singular, InvariantUnderCommonWeightScaling) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    const WeightSet w = WeightSet::from_qbar_m(test::random_spd(rng), test::random_spd(rng));
    const WeightSet w3 = WeightSet::from_qbar_m(3.0 * w.Qbar(), 3.0 * w.M());
    const Vec2 e(n(rng), n(rng)), Lg1(n(rng), n(rng)), dy(n(rng), n(rng));
    const double a = u1_singular(e, Lg1, dy, w), b = u1_singular(e, Lg1, dy, w3);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(Saturate, Clamps) {
  EXPECT_EQ(saturate(15, 10), 10);
  EXPECT_EQ(saturate(-15, 10), -10);
  EXPECT_EQ(saturate(3, 10), 3);
}

TEST(SignOf, ZeroIsPositive) {
  EXPECT_EQ(sign_of(0.0), 1.0);
  EXPECT_EQ(sign_of(-0.0), 1.0);
  EXPECT_EQ(sign_of(-2.0), -1.0);
}

TEST(Xi2Dot, VanishesOnSingularArcRelation) {
  const FlatSystemDescriptor s = steerable_axle();
  const WeightSet w = steering_weights();
  const Vec2 e(0.3, -0.2);
  const Vec2 edot = -w.Minv() * w.Qbar() * e;
  const TrackingState ts = tracking_state(s, Vec3(0, 0, 0.9), e, edot);
  EXPECT_NEAR(xi2_dot(ts, w, 1.7), 0.0, 1e-15);
}

TEST(Xi2Dot, VanishesForZeroDrive) {
  const TrackingState ts =
      tracking_state(steerable_axle(), Vec3(0, 0, 0.9), Vec2(1, 2), Vec2(-3, 4));
  EXPECT_EQ(xi2_dot(ts, steering_weights(), 0.0), 0.0);
}

TEST(Xi2Dot, VanishesForPerfectTracking) {
  const TrackingState ts =
      tracking_state(steerable_axle(), Vec3(0, 0, 0.9), Vec2::Zero(), Vec2::Zero());
  EXPECT_EQ(xi2_dot(ts, steering_weights(), 2.0), 0.0);
}

TEST(Coefficients, AxleIdentityStructure) {
  const FlatSystemDescriptor s = steerable_axle();
  for (const Vec3& x : test::random_states(100)) {
    const TrackingState ts = tracking_state(s, x, Vec2(0.5, -1), Vec2(0.2, 0.1));
    const CoefficientSet c = coefficients(ts, steering_weights(), Vec2(1, 2), 3.0);
    EXPECT_NEAR(c.A11, 1.0, 1e-12);
    EXPECT_NEAR(c.A12, 0.0, 1e-12);
    EXPECT_NEAR(c.A21, 0.0, 1e-12);
    EXPECT_NEAR(c.A22, 1.0, 1e-12);
  }
}

TEST(Coefficients, AxleDriveCoefficient) {
  const FlatSystemDescriptor s = steerable_axle();
  const WeightSet w = steering_weights();
  const Vec3 x(1, 2, 0.6);
  const Vec2 e(0.5, -1), ydd(1, 2);
  const TrackingState ts = tracking_state(s, x, e, Vec2(0.2, 0.1));
  EXPECT_EQ(ts.Lg1sqphi, Vec2::Zero());
  const CoefficientSet c = coefficients(ts, w, ydd, 3.0);
  EXPECT_NEAR(c.b1, (ydd - w.Q() * e).dot(ts.Lg1phi), 1e-12);
  EXPECT_NEAR(c.b2, (ydd - w.Q() * e).dot(ts.Lbphi), 1e-12);
}

TEST(Coefficients, ZeroDriveGivesZeroB) {
  const TrackingState ts =
      tracking_state(steerable_axle(), Vec3(1, 2, 0.6), Vec2::Zero(), Vec2::Zero());
  const CoefficientSet c = coefficients(ts, steering_weights(), Vec2::Zero(), 2.0);
  EXPECT_EQ(c.b1, 0.0);
  EXPECT_EQ(c.b2, 0.0);
}

TEST(Coefficients, DegenerateBasisThrows) {
  TrackingState ts;
  ts.Lg1phi = Vec2(1, 0);
  ts.Lbphi = Vec2(2, 0);
  EXPECT_THROW(coefficients(ts, steering_weights(), Vec2::Zero(), 1.0), LegendreClebschViolated);
}

TEST(U2Singular, ZeroDrive) {
  const CoefficientSet c{1, 0, 0, 1, 0, 0};
  EXPECT_EQ(u2_singular(c, 2.0, 1e-7), 0.0);
}

TEST(U2Singular, AxleReducesToMinusB2OverU1) {
  const CoefficientSet c{1, 0, 0, 1, 0.7, -3.0};
  EXPECT_DOUBLE_EQ(u2_singular(c, 2.0, 1e-7), 1.5);
}

TEST(U2Singular, GuardThrows) {
  const CoefficientSet c{1, 0, 0, 1, 0.7, -3.0};
  EXPECT_THROW(u2_singular(c, 1e-12, 1e-7), U1NearZero);
}

TEST(LyapunovTerms, OnManifoldGain) {
  const CoefficientSet c{1, 0, 0, 1, 0.3, -0.4};
  const LyapunovTerms lt = lyapunov_terms({}, steering_weights(), c, {}, 2.0, 0.0, 1e-7);
  EXPECT_DOUBLE_EQ(lt.f2, 4.0);
  EXPECT_GT(lt.f2, 0.0);
}

TEST(LyapunovTerms, OnManifoldZeroDrive) {
  const CoefficientSet c{1, 0, 0, 1, 0, 0};
  const LyapunovTerms lt = lyapunov_terms({}, steering_weights(), c, {}, 2.0, 0.0, 1e-7);
  EXPECT_EQ(lt.f1, 0.0);
  EXPECT_TRUE(lt.h2_defined);
  EXPECT_EQ(lt.h2, 0.0);
}

TEST(LyapunovTerms, OnManifoldBalanceEqualsSingularInput) {
  // On the manifold f1 - f2 u2 = 0 has the singular value as its root.
  const CoefficientSet c{1.3, 0.2, 0.2, 0.9, 0.7, -1.1};
  const double u1 = 1.6;
  const LyapunovTerms lt = lyapunov_terms({}, steering_weights(), c, {}, u1, 0.0, 1e-7);
  EXPECT_NEAR(lt.h2, u2_singular(c, u1, 1e-7), 1e-12);
}

TEST(LyapunovTerms, UndefinedGainIsFlagged) {
  const CoefficientSet c{1, 0, 0, 1, 0.3, -0.4};
  // f2 = 4 - (beta3 + xi2dot/u1^2) xi2dot = 0 for xi2dot = 4 with u1 = 2, beta3 = 0.
  const LyapunovTerms lt = lyapunov_terms({}, steering_weights(), c, {}, 2.0, 4.0, 1e-7);
  EXPECT_FALSE(lt.h2_defined);
  EXPECT_TRUE(std::isnan(lt.h2));
}

TEST(LyapunovTerms, GuardThrows) {
  const CoefficientSet c{1, 0, 0, 1, 0, 0};
  EXPECT_THROW(lyapunov_terms({}, steering_weights(), c, {}, 0.0, 0.0, 1e-7), U1NearZero);
}

TEST(ControlStep, InitialBangForSteeringScenario) {
  const FlatSystemDescriptor s = steerable_axle();
  ControllerContext ctx;
  const ControlDecision d = control_step(s, WeightSet::from_q_m(100.0 * Mat2::Identity(), Mat2::Identity()),
                                         InputBounds{10, 10}, lissajous(5.0), Vec3(0, -1, pi / 3),
                                         0.0, {}, ctx);
  EXPECT_GT(std::abs(d.diagnostics.xi2_dot), 1e-5);
  EXPECT_EQ(d.mode2, Mode2::bang_off_manifold);
  EXPECT_EQ(std::abs(d.u[1]), 10.0);
  EXPECT_EQ(sign_of(d.u[1]), sign_of(d.diagnostics.xi2_dot));
}

TEST(ControlStep, OnManifoldAppliesSingularValue) {
  const FlatSystemDescriptor s = steerable_axle();
  const ReferenceSignal r = lissajous(5.0);
  for (double t : {0.5, 1.0, 3.2}) {
    ControllerContext ctx;
    const ControlDecision d =
        control_step(s, steering_weights(), {10, 10}, r, on_reference(r, t), t, {}, ctx);
    EXPECT_EQ(d.mode2, Mode2::singular_interior) << t;
    EXPECT_EQ(d.mode1, Mode1::singular_interior) << t;
    EXPECT_LT(std::abs(d.u2_singular), 10.0);
    EXPECT_NEAR(d.u[1], d.u2_singular, 1e-9);
    EXPECT_NEAR(d.u[1], -d.coefficients.b2 / d.u[0], 1e-9);
    EXPECT_TRUE(ctx.on_manifold);
  }
}

TEST(ControlStep, StationaryPointEngagesFallback) {
  ControllerContext ctx;
  const ControlDecision d = control_step(steerable_axle(), steering_weights(), {10, 10},
                                         polynomial({1.0}, {2.0}, 1.0), Vec3(1, 2, 0.3), 0.0,
                                         {}, ctx);
  EXPECT_EQ(d.u, Vec2::Zero());
  EXPECT_TRUE(d.diagnostics.u1_fallback);
  EXPECT_TRUE(std::isnan(d.u2_singular));
}

TEST(ControlStep, FallbackHoldsPreviousSteering) {
  ControllerContext ctx{true, 0.37};
  const ControlDecision d = control_step(steerable_axle(), steering_weights(), {10, 10},
                                         polynomial({1.0}, {2.0}, 1.0), Vec3(1, 2, 0.3), 0.0,
                                         {}, ctx);
  EXPECT_EQ(d.u[1], 0.37);
}

TEST(ControlStep, HysteresisKeepsManifoldUntilTenfoldThreshold) {
  const FlatSystemDescriptor s = steerable_axle();
  const ReferenceSignal r = lissajous(5.0);
  const ControllerTuning tuning;
  const double threshold = tuning.switch_threshold({10, 10});
  // Nudge the heading until |xi2dot| sits between the entry and exit thresholds.
  const Vec3 x0 = on_reference(r, 1.0);
  Vec3 x = x0;
  double xi = 0.0;
  for (double dth = 1e-9; dth < 1e-2; dth *= 1.5) {
    x = x0 + Vec3(0, 0, dth);
    Controller probe(s, steering_weights(), {10, 10}, r, tuning);
    xi = std::abs(probe.manifold_function(x, 1.0));
    if (xi > 2 * threshold) break;
  }
  ASSERT_GT(xi, threshold);
  ASSERT_LT(xi, tuning.hysteresis * threshold);
  ControllerContext off, on{true, 0.0};
  EXPECT_EQ(control_step(s, steering_weights(), {10, 10}, r, x, 1.0, tuning, off).mode2,
            Mode2::bang_off_manifold);
  EXPECT_NE(control_step(s, steering_weights(), {10, 10}, r, x, 1.0, tuning, on).mode2,
            Mode2::bang_off_manifold);
}

TEST(ControlStep, StructuralIdentities) {
  const FlatSystemDescriptor s = steerable_axle();
  const ReferenceSignal r = lissajous(5.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> t(0.0, 5.0);
  for (const Vec3& x : test::random_states(200)) {
    ControllerContext ctx;
    const ControlDecision d = control_step(s, steering_weights(), {10, 10}, r, x, t(rng), {}, ctx);
    EXPECT_LE(std::abs(d.diagnostics.xi2), 1e-12);
    EXPECT_LE(std::abs(d.u[0]), 10.0);
    EXPECT_LE(std::abs(d.u[1]), 10.0);
    EXPECT_GE(d.diagnostics.V, 0.0);
    if (d.mode1 == Mode1::singular_interior) {
      EXPECT_LE(std::abs(d.diagnostics.xi1_residual), 1e-9);
    }
    if (d.mode2 == Mode2::bang_off_manifold) {
      EXPECT_EQ(sign_of(d.u[1]), sign_of(d.diagnostics.xi2_dot));
    }
  }
}

TEST(ControlStep, OutOfDomainPropagates) {
  FlatSystemDescriptor s = steerable_axle();
  s.domain = [](const Vec3& x) { return x[0] < 0.0; };
  ControllerContext ctx;
  EXPECT_THROW(control_step(s, steering_weights(), {10, 10}, lissajous(5.0), Vec3(1, 0, 0), 0.0,
                            {}, ctx),
               OutOfDomain);
}

// Derivative of xi2dot along the closed-loop flow with u2 held, by central
// differences in (x, t).
double xi2ddot_along_flow(const Controller& c, const Vec3& x, double t, double u2) {
  const double h = 1e-5;
  const auto xdot = [&](const Vec3& p, double tp) {
    ControllerContext ctx;
    const ControlDecision d = control_step(c.system(), c.weights(), c.bounds(), c.reference(),
                                           p, tp, c.tuning(), ctx);
    return Vec3(c.system().g1.eval(p) * d.u[0] + c.system().g2.eval(p) * u2);
  };
  const Vec3 v = xdot(x, t);
  return (c.manifold_function(x + h * v, t + h) - c.manifold_function(x - h * v, t - h)) / (2 * h);
}

TEST(LyapunovTerms, SecondDerivativeMatchesFlowOnManifold) {
  const FlatSystemDescriptor s = steerable_axle();
  const ReferenceSignal r = lissajous(5.0);
  const Controller c(s, steering_weights(), {10, 10}, r);
  for (double t : {0.7, 1.9, 4.1}) {
    const Vec3 x = on_reference(r, t);
    ControllerContext ctx;
    const ControlDecision d = control_step(s, c.weights(), c.bounds(), r, x, t, {}, ctx);
    for (double u2 : {-3.0, 0.0, 2.5}) {
      const double model = d.diagnostics.f1 - d.diagnostics.f2 * u2;
      EXPECT_NEAR(xi2ddot_along_flow(c, x, t, u2), model, 1e-6 * std::max(1.0, std::abs(model)));
    }
  }
}

TEST(LyapunovTerms, OffManifoldGainMatchesFlowDependenceOnSteering) {
  // d(xi2ddot)/du2 = -f2 holds off the manifold as well.
  const FlatSystemDescriptor s = steerable_axle();
  const ReferenceSignal r = lissajous(5.0);
  const Controller c(s, steering_weights(), {10, 10}, r);
  for (double dth : {0.01, 0.03, -0.02}) {
    const double t = 1.3;
    const Vec3 x = on_reference(r, t) + Vec3(0.02, -0.01, dth);
    ControllerContext ctx;
    const ControlDecision d = control_step(s, c.weights(), c.bounds(), r, x, t, {}, ctx);
    ASSERT_EQ(d.mode1, Mode1::singular_interior);
    const double slope = xi2ddot_along_flow(c, x, t, 1.0) - xi2ddot_along_flow(c, x, t, 0.0);
    EXPECT_NEAR(slope, -d.diagnostics.f2, 1e-5 * std::max(1.0, std::abs(d.diagnostics.f2)));
  }
}

TEST(LyapunovTerms, OffManifoldDriftDeviatesInProportionToXi2Dot) {
  // The closed-form drift term f1 differs from the drift of the flow by a term
  // proportional to xi2dot, so both coincide on the manifold.
  const FlatSystemDescriptor s = steerable_axle();
  const ReferenceSignal r = lissajous(5.0);
  const Controller c(s, steering_weights(), {10, 10}, r);
  const double t = 1.3;
  const Vec3 base = on_reference(r, t);
  double prev_ratio = 0.0;
  for (double scale : {1e-2, 5e-3, 2.5e-3}) {
    const Vec3 x = base + scale * Vec3(1.0, -0.5, 2.0);
    ControllerContext ctx;
    const ControlDecision d = control_step(s, c.weights(), c.bounds(), r, x, t, {}, ctx);
    const double gap = xi2ddot_along_flow(c, x, t, 0.0) - d.diagnostics.f1;
    const double ratio = gap / d.diagnostics.xi2_dot;
    if (prev_ratio != 0.0) EXPECT_NEAR(ratio, prev_ratio, 0.05 * std::abs(prev_ratio));
    prev_ratio = ratio;
  }
}

}  // namespace
}  // namespace flatpmp
