#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "flatpmp/systems.hpp"
#include "test_support.hpp"

namespace flatpmp {
namespace {

using std::numbers::pi;

TEST(SteerableAxle, DriveFieldAtQuarterTurn) {
  const FlatSystemDescriptor s = steerable_axle();
  const Vec3 g = s.g1.eval(Vec3(0.3, 0.1, pi / 2));
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_NEAR(g[1], 0.0, 1e-16);
  EXPECT_EQ(g[2], 0.0);
}

TEST(SteerableAxle, DeterminantIsOneEverywhere) {
  const FlatSystemDescriptor s = steerable_axle();
  for (const Vec3& x : test::random_states(100)) {
    const OutputLieData d = output_lie_data(s.g1, s.g2, s.phi, x);
    EXPECT_NEAR(std::abs(nondegeneracy_determinant(d)), 1.0, 1e-15);
  }
}

TEST(SteerableAxle, SteeringFieldAnnihilatesOutput) {
  const FlatSystemDescriptor s = steerable_axle();
  for (const Vec3& x : test::random_states(100)) {
    EXPECT_EQ(output_lie_data(s.g1, s.g2, s.phi, x).Lg2phi, Vec2::Zero());
  }
}

TEST(ChainedForm, DriveDerivativeOfOutput) {
  const FlatSystemDescriptor s = chained_form();
  for (const Vec3& z : test::random_states(20)) {
    const OutputLieData d = output_lie_data(s.g1, s.g2, s.phi, z);
    EXPECT_EQ(d.Lg1phi, Vec2(1.0, z[2]));
  }
}

TEST(ChainedForm, BracketDerivativeOfOutput) {
  const FlatSystemDescriptor s = chained_form();
  for (const Vec3& z : test::random_states(20)) {
    EXPECT_EQ(output_lie_data(s.g1, s.g2, s.phi, z).Lbphi, Vec2(0.0, -1.0));
  }
}

TEST(ChainedForm, DecompositionIsZero) {
  const FlatSystemDescriptor s = chained_form();
  const BracketDecomposition d = decompose_higher_brackets(s.g1, s.g2, Vec3(1, 2, 0.3));
  EXPECT_LE(d.alpha.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(d.beta.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(VectorFieldRhs, ZeroInputIsStationary) {
  for (const FlatSystemDescriptor& s : {steerable_axle(), chained_form()}) {
    for (const Vec3& x : test::random_states(50)) {
      EXPECT_EQ(vector_field_rhs(s, x, Vec2::Zero()), Vec3::Zero());
    }
  }
}

TEST(VectorFieldRhs, AxleDriveAtZeroHeading) {
  EXPECT_EQ(vector_field_rhs(steerable_axle(), Vec3(1, 2, 0), Vec2(1, 0)), Vec3(0, 1, 0));
}

TEST(VectorFieldRhs, AxleSteering) {
  EXPECT_EQ(vector_field_rhs(steerable_axle(), Vec3(1, 2, 0.7), Vec2(0, 1)), Vec3(0, 0, 1));
}

TEST(VectorFieldRhs, LinearInInput) {
  const double a = 0.3, b = -2.1;
  for (const FlatSystemDescriptor& s : {steerable_axle(), chained_form()}) {
    for (const Vec3& x : test::random_states(50)) {
      const Vec2 u(1.2, -0.7), v(-3.0, 0.4);
      const Vec3 lhs = vector_field_rhs(s, x, a * u + b * v);
      const Vec3 rhs = a * vector_field_rhs(s, x, u) + b * vector_field_rhs(s, x, v);
      EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(VectorFieldRhs, OutOfDomainThrows) {
  FlatSystemDescriptor s = chained_form();
  s.domain = [](const Vec3& z) { return std::abs(z[2]) < 1.0; };
  EXPECT_NO_THROW(vector_field_rhs(s, Vec3(0, 0, 0.5), Vec2(1, 1)));
  EXPECT_THROW(vector_field_rhs(s, Vec3(0, 0, 1.5), Vec2(1, 1)), OutOfDomain);
  EXPECT_THROW(vector_field_rhs(steerable_axle(), Vec3(0, NAN, 0), Vec2(1, 1)), OutOfDomain);
}

TEST(InputBoundsValidation, RejectsNonPositive) {
  EXPECT_NO_THROW((InputBounds{10, 10}.validate()));
  EXPECT_THROW((InputBounds{0, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((InputBounds{10, -1}.validate()), std::invalid_argument);
}

TEST(Registry, KnownNamesResolve) {
  for (const std::string& name : system_names()) {
    EXPECT_EQ(make_system(name).name, name);
  }
  EXPECT_THROW(make_system("bicycle"), std::out_of_range);
}

TEST(Registry, BuiltInsPassFlatnessCheck) {
  const auto samples = test::random_states(100);
  for (const std::string& name : system_names()) {
    EXPECT_TRUE(flatness_check(make_system(name), samples).pass) << name;
  }
}

}  // namespace
}  // namespace flatpmp
