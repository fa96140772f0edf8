#include "flatpmp/weights.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flatpmp {

namespace {

Mat2 symmetrize(const Mat2& A) { return 0.5 * (A + A.transpose()); }

void require_symmetric(const Mat2& A, const char* name) {
  if (std::abs(A(0, 1) - A(1, 0)) > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff())) {
    throw NotPositiveDefinite(std::string(name) + " is not symmetric");
  }
}

void require_pd(const Mat2& A, const char* name) {
  if (!is_positive_definite(A)) {
    throw NotPositiveDefinite(std::string(name) + " is not positive definite");
  }
}

}  // namespace

bool is_positive_definite(const Mat2& A, double tol) {
  const Eigen::SelfAdjointEigenSolver<Mat2> es(symmetrize(A));
  return es.eigenvalues().minCoeff() > tol;
}

Mat2 spd_sqrt(const Mat2& A) {
  const Eigen::SelfAdjointEigenSolver<Mat2> es(symmetrize(A));
  if (!(es.eigenvalues().minCoeff() > 1e-12)) {
    throw NotPositiveDefinite("matrix square root of a non-SPD matrix");
  }
  const Mat2& V = es.eigenvectors();
  return symmetrize(V * es.eigenvalues().cwiseSqrt().asDiagonal() * V.transpose());
}

WeightSet::WeightSet(const Mat2& Qbar, const Mat2& M, const Mat2& Q)
    : Qbar_(Qbar), M_(M), Q_(Q), Minv_(M.inverse()) {}

WeightSet WeightSet::from_qbar_m(const Mat2& Qbar, const Mat2& M) {
  require_symmetric(Qbar, "Qbar");
  require_symmetric(M, "M");
  require_pd(Qbar, "Qbar");
  require_pd(M, "M");
  const Mat2 Qb = symmetrize(Qbar);
  const Mat2 Ms = symmetrize(M);
  WeightSet w(Qb, Ms, Qb);
  w.Q_ = symmetrize(Qb * w.Minv_ * Qb);
  require_pd(w.Q_, "Q");
  return w;
}

WeightSet WeightSet::from_q_m(const Mat2& Q, const Mat2& M) {
  require_symmetric(Q, "Q");
  require_symmetric(M, "M");
  require_pd(Q, "Q");
  require_pd(M, "M");
  const Mat2 Ms = symmetrize(M);
  const Mat2 Mh = spd_sqrt(Ms);
  const Mat2 Mh_inv = Mh.inverse();
  const Mat2 inner = spd_sqrt(symmetrize(Mh_inv * symmetrize(Q) * Mh_inv));
  const Mat2 Qbar = symmetrize(Mh * inner * Mh);
  WeightSet w(Qbar, Ms, symmetrize(Q));
  require_pd(w.Qbar_, "Qbar");
  return w;
}

WeightSet WeightSet::unchecked(const Mat2& Qbar, const Mat2& M, const Mat2& Q) {
  return WeightSet(Qbar, M, Q);
}

double WeightSet::coupling_residual() const {
  return (Q_ - Qbar_ * Minv_ * Qbar_).cwiseAbs().maxCoeff();
}

double WeightSet::min_decay_rate() const {
  // Qbar M^{-1} is similar to the SPD matrix M^{-1/2} Qbar M^{-1/2}.
  const Eigen::EigenSolver<Mat2> es(Qbar_ * Minv_);
  return es.eigenvalues().real().minCoeff();
}

WeightSet WeightSet::scaled_qbar(double factor) const {
  return from_qbar_m(factor * Qbar_, M_);
}

}  // namespace flatpmp
