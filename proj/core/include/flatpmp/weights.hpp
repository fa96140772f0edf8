#pragma once

#include "flatpmp/types.hpp"

namespace flatpmp {

/// Weights of the tracking cost
///   J = 1/2 e(T)' Qbar e(T) + int 1/2 (e' Q e + edot' M edot) dt
/// with the coupling Q = Qbar M^{-1} Qbar that makes the closed-form costate
/// exist.
class WeightSet {
 public:
  /// Primary construction: Q is derived. Throws NotPositiveDefinite.
  static WeightSet from_qbar_m(const Mat2& Qbar, const Mat2& M);

  /// Solves Qbar M^{-1} Qbar = Q for the SPD Qbar,
  ///   Qbar = M^{1/2} (M^{-1/2} Q M^{-1/2})^{1/2} M^{1/2}.
  static WeightSet from_q_m(const Mat2& Q, const Mat2& M);

  /// No coupling or definiteness checks. Only the verification path uses
  /// this, to report a violated coupling instead of refusing to build.
  static WeightSet unchecked(const Mat2& Qbar, const Mat2& M, const Mat2& Q);

  const Mat2& Qbar() const { return Qbar_; }
  const Mat2& M() const { return M_; }
  const Mat2& Q() const { return Q_; }
  const Mat2& Minv() const { return Minv_; }

  /// max-norm of Q - Qbar M^{-1} Qbar.
  double coupling_residual() const;

  /// Singular-arc error dynamics edot = A e with A = -M^{-1} Qbar.
  Mat2 error_dynamics() const { return -Minv_ * Qbar_; }

  /// Smallest eigenvalue of Qbar M^{-1}, the slowest error decay rate on the arc.
  double min_decay_rate() const;

  WeightSet scaled_qbar(double factor) const;

 private:
  WeightSet(const Mat2& Qbar, const Mat2& M, const Mat2& Q);

  Mat2 Qbar_;
  Mat2 M_;
  Mat2 Q_;
  Mat2 Minv_;
};

/// Symmetric square root through the eigendecomposition; throws
/// NotPositiveDefinite when an eigenvalue is <= 1e-12.
Mat2 spd_sqrt(const Mat2& A);

bool is_positive_definite(const Mat2& A, double tol = 1e-12);

}  // namespace flatpmp
