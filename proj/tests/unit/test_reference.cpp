#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "flatpmp/reference.hpp"

namespace flatpmp {
namespace {

using std::numbers::pi;

// Central differences of y and dy agree with the reported derivatives.
void expect_consistent_derivatives(const ReferenceSignal& r) {
  const double h = 1e-5;
  for (int i = 1; i < 50; ++i) {
    const double t = r.horizon() * i / 50.0;
    const ReferenceSample s = r(t), p = r(t + h), m = r(t - h);
    const Vec2 dy = (p.y - m.y) / (2 * h);
    const Vec2 ddy = (p.dy - m.dy) / (2 * h);
    EXPECT_LE((dy - s.dy).cwiseAbs().maxCoeff(), 1e-4 * std::max(1.0, s.dy.cwiseAbs().maxCoeff()));
    EXPECT_LE((ddy - s.ddy).cwiseAbs().maxCoeff(), 1e-4 * std::max(1.0, s.ddy.cwiseAbs().maxCoeff()));
  }
}

TEST(Lissajous, StartPoint) {
  const ReferenceSample s = lissajous(5.0)(0.0);
  EXPECT_DOUBLE_EQ(s.y[0], 2.0);
  EXPECT_DOUBLE_EQ(s.y[1], 0.0);
}

TEST(Lissajous, StartVelocity) {
  const ReferenceSample s = lissajous(5.0)(0.0);
  EXPECT_NEAR(s.dy[0], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.dy[1], pi / 5.0);
}

TEST(Lissajous, HalfPeriod) {
  const ReferenceSample s = lissajous(5.0)(2.5);
  EXPECT_NEAR(s.y[0], -2.0, 1e-15);
  EXPECT_NEAR(s.y[1], 1.0, 1e-15);
}

TEST(Lissajous, DerivativesConsistent) {
  expect_consistent_derivatives(lissajous(5.0));
  expect_consistent_derivatives(lissajous(1.3));
}

TEST(Lissajous, RejectsNonPositivePeriod) {
  EXPECT_THROW(lissajous(0.0), std::invalid_argument);
}

TEST(Polynomial, Constant) {
  const ReferenceSample s = polynomial({3.0}, {3.0}, 1.0)(0.4);
  EXPECT_EQ(s.y, Vec2(3.0, 3.0));
  EXPECT_EQ(s.dy, Vec2::Zero());
  EXPECT_EQ(s.ddy, Vec2::Zero());
}

TEST(Polynomial, Linear) {
  const ReferenceSample s = polynomial({0.0, 1.0}, {0.0, 2.0}, 1.0)(0.7);
  EXPECT_EQ(s.dy, Vec2(1.0, 2.0));
  EXPECT_EQ(s.ddy, Vec2::Zero());
}

TEST(Polynomial, Quadratic) {
  const ReferenceSample s = polynomial({0.0, 0.0, 1.0}, {0.0}, 1.0)(0.7);
  EXPECT_EQ(s.ddy, Vec2(2.0, 0.0));
}

TEST(Polynomial, DerivativesConsistent) {
  expect_consistent_derivatives(polynomial({1.0, -2.0, 0.5, 0.25}, {0.0, 0.3, -1.0}, 2.0));
}

TEST(Polynomial, EmptyCoefficientsAreZero) {
  const ReferenceSample s = polynomial({}, {}, 1.0)(0.5);
  EXPECT_EQ(s.y, Vec2::Zero());
}

}  // namespace
}  // namespace flatpmp
