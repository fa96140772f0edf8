#include <random>

#include <gtest/gtest.h>

#include "flatpmp/weights.hpp"
#include "test_support.hpp"

namespace flatpmp {
namespace {

double max_abs(const Mat2& A) { return A.cwiseAbs().maxCoeff(); }

Mat2 diag(double a, double b) { return Eigen::Vector2d(a, b).asDiagonal(); }

TEST(FromQbarM, SteeringWeights) {
  const WeightSet w = WeightSet::from_qbar_m(diag(10, 10), Mat2::Identity());
  EXPECT_LE(max_abs(w.Q() - diag(100, 100)), 1e-12);
}

TEST(FromQbarM, Identity) {
  const WeightSet w = WeightSet::from_qbar_m(Mat2::Identity(), Mat2::Identity());
  EXPECT_EQ(w.Q(), Mat2::Identity());
}

TEST(FromQbarM, RejectsIndefiniteQbar) {
  EXPECT_THROW(WeightSet::from_qbar_m(diag(1, -1), Mat2::Identity()), NotPositiveDefinite);
}

TEST(FromQbarM, RejectsIndefiniteM) {
  EXPECT_THROW(WeightSet::from_qbar_m(Mat2::Identity(), diag(1, 0)), NotPositiveDefinite);
}

TEST(FromQbarM, RejectsAsymmetricInput) {
  Mat2 A;
  A << 2, 1, 0, 2;
  EXPECT_THROW(WeightSet::from_qbar_m(A, Mat2::Identity()), NotPositiveDefinite);
}

TEST(FromQM, SteeringWeights) {
  const WeightSet w = WeightSet::from_q_m(diag(100, 100), Mat2::Identity());
  EXPECT_LE(max_abs(w.Qbar() - diag(10, 10)), 1e-10);
}

TEST(FromQM, Identity) {
  const WeightSet w = WeightSet::from_q_m(Mat2::Identity(), Mat2::Identity());
  EXPECT_LE(max_abs(w.Qbar() - Mat2::Identity()), 1e-15);
}

TEST(FromQM, CoupledSquareRoot) {
  Mat2 Q;
  Q << 5, 1, 1, 2;
  const WeightSet w = WeightSet::from_q_m(Q, Mat2::Identity());
  EXPECT_LE(max_abs(w.Qbar() * w.Qbar() - Q), 1e-10);
  EXPECT_TRUE(is_positive_definite(w.Qbar()));
}

TEST(FromQM, GeneralMassSatisfiesCoupling) {
  Mat2 Q, M;
  Q << 7, -2, -2, 3;
  M << 2, 0.5, 0.5, 1;
  const WeightSet w = WeightSet::from_q_m(Q, M);
  EXPECT_LE(w.coupling_residual(), 1e-10);
  EXPECT_LE(max_abs(w.M() * w.Minv() - Mat2::Identity()), 1e-12);
}

TEST(FromQM, RejectsIndefiniteQ) {
  EXPECT_THROW(WeightSet::from_q_m(diag(1, -1), Mat2::Identity()), NotPositiveDefinite);
}

TEST(WeightSetProperties, RoundTripOverRandomPairs) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Mat2 Qbar = test::random_spd(rng);
    const Mat2 M = test::random_spd(rng);
    const WeightSet w = WeightSet::from_qbar_m(Qbar, M);
    EXPECT_LE(w.coupling_residual(), 1e-12 * std::max(1.0, max_abs(w.Q())));
    EXPECT_LE(max_abs(w.M() * w.Minv() - Mat2::Identity()), 1e-12);
    const WeightSet back = WeightSet::from_q_m(w.Q(), M);
    EXPECT_LE(max_abs(back.Qbar() - Qbar), 1e-9);
  }
}

TEST(WeightSetProperties, SingularArcDynamicsAreHurwitz) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const WeightSet w = WeightSet::from_qbar_m(test::random_spd(rng), test::random_spd(rng));
    const Eigen::EigenSolver<Mat2> es(w.error_dynamics());
    EXPECT_LT(es.eigenvalues().real().maxCoeff(), 0.0);
    EXPECT_GT(w.min_decay_rate(), 0.0);
  }
}

TEST(WeightSetProperties, SteeringDecayRate) {
  const WeightSet w = WeightSet::from_qbar_m(diag(10, 10), Mat2::Identity());
  EXPECT_NEAR(w.min_decay_rate(), 10.0, 1e-12);
}

TEST(WeightSetProperties, ScaledQbarKeepsCoupling) {
  const WeightSet w = WeightSet::from_qbar_m(diag(10, 10), Mat2::Identity()).scaled_qbar(0.5);
  EXPECT_LE(max_abs(w.Qbar() - diag(5, 5)), 1e-15);
  EXPECT_LE(max_abs(w.Q() - diag(25, 25)), 1e-12);
}

TEST(WeightSetProperties, UncheckedReportsCouplingResidual) {
  const WeightSet w = WeightSet::unchecked(diag(5, 5), Mat2::Identity(), diag(100, 100));
  EXPECT_DOUBLE_EQ(w.coupling_residual(), 75.0);
}

TEST(SpdSqrt, SquaresBack) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const Mat2 A = test::random_spd(rng);
    const Mat2 S = spd_sqrt(A);
    EXPECT_LE(max_abs(S * S - A), 1e-12 * max_abs(A));
    EXPECT_TRUE(is_positive_definite(S));
  }
}

}  // namespace
}  // namespace flatpmp
