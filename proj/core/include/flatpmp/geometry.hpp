#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "flatpmp/types.hpp"

namespace flatpmp {

enum class DerivativeSource { analytic, finite_difference };

/// Central-difference Jacobian of a map R^3 -> R^m. The step for coordinate k
/// is max(1, |x_k|) * 1e-5.
template <int Rows>
Eigen::Matrix<double, Rows, 3> fd_jacobian(
    const std::function<Eigen::Matrix<double, Rows, 1>(const Vec3&)>& f,
    const Vec3& x) {
  Eigen::Matrix<double, Rows, 3> J;
  for (int k = 0; k < 3; ++k) {
    const double h = std::max(1.0, std::abs(x[k])) * 1e-5;
    Vec3 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    J.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

/// A vector field g = g^k d/dx^k on R^3 together with its Jacobian
/// J(x)_{kl} = dg^k/dx^l.
class SmoothVectorField {
 public:
  using EvalFn = std::function<Vec3(const Vec3&)>;
  using JacobianFn = std::function<Mat3(const Vec3&)>;

  SmoothVectorField() = default;

  static SmoothVectorField analytic(EvalFn eval, JacobianFn jacobian);
  static SmoothVectorField finite_difference(EvalFn eval);

  Vec3 operator()(const Vec3& x) const { return eval_(x); }
  Vec3 eval(const Vec3& x) const { return eval_(x); }
  Mat3 jacobian(const Vec3& x) const { return jacobian_(x); }
  DerivativeSource source() const { return source_; }

  /// a*this + b*other, pointwise (used by the bilinearity checks).
  SmoothVectorField combined(double a, const SmoothVectorField& other,
                             double b) const;

 private:
  EvalFn eval_;
  JacobianFn jacobian_;
  DerivativeSource source_ = DerivativeSource::analytic;
};

/// The flat output x -> (phi^1, phi^2) with first and second derivatives.
class FlatOutputMap {
 public:
  using EvalFn = std::function<Vec2(const Vec3&)>;
  using JacobianFn = std::function<Mat23(const Vec3&)>;
  using HessianFn = std::function<OutputHessian(const Vec3&)>;

  FlatOutputMap() = default;

  static FlatOutputMap analytic(EvalFn eval, JacobianFn jacobian,
                                HessianFn hessian);
  /// Jacobian and Hessians by central differences of eval.
  static FlatOutputMap finite_difference(EvalFn eval);

  Vec2 eval(const Vec3& x) const { return eval_(x); }
  Mat23 jacobian(const Vec3& x) const { return jacobian_(x); }
  OutputHessian hessian(const Vec3& x) const { return hessian_(x); }
  DerivativeSource source() const { return source_; }

 private:
  EvalFn eval_;
  JacobianFn jacobian_;
  HessianFn hessian_;
  DerivativeSource source_ = DerivativeSource::analytic;
};

/// Coefficients of the nested brackets in the basis {g1, g2, [g1,g2]}:
///   [g1,[g1,g2]] = alpha^1 g1 + alpha^2 g2 + alpha^3 [g1,g2]
///   [g2,[g1,g2]] = beta^1  g1 + beta^2  g2 + beta^3  [g1,g2]
struct BracketDecomposition {
  Vec3 alpha = Vec3::Zero();
  Vec3 beta = Vec3::Zero();
  double residual = 0.0;
  double condition = 1.0;
};

/// L_g f at x, given the value and gradient of f at x. The value is not
/// needed for the derivative itself; it is accepted so callers can pass the
/// (value, gradient) pair they already hold.
double lie_derivative(const SmoothVectorField& field, double value,
                      const Vec3& gradient, const Vec3& x);

/// [g1, g2](x) = J_{g2} g1 - J_{g1} g2.
Vec3 lie_bracket(const SmoothVectorField& g1, const SmoothVectorField& g2,
                 const Vec3& x);

/// The bracket [g1, g2] as a field. Its Jacobian is always taken by central
/// differences of the bracket map, so second derivatives of g1, g2 are never
/// required.
SmoothVectorField bracket_field(const SmoothVectorField& g1,
                                const SmoothVectorField& g2);

/// Throws SpanDeficient when cond([g1 g2 [g1,g2]]) > 1e10.
BracketDecomposition decompose_higher_brackets(const SmoothVectorField& g1,
                                               const SmoothVectorField& g2,
                                               const Vec3& x);

/// Lie-derivative quantities of the flat output needed by the control law.
struct OutputLieData {
  Vec3 g1, g2, bracket;
  Mat23 dphi;           // d phi^j / d x^k
  Vec2 Lg1phi;          // L_{g1} phi
  Vec2 Lg2phi;          // L_{g2} phi
  Vec2 Lbphi;           // L_{[g1,g2]} phi
  Mat23 dLg1phi;        // d (L_{g1} phi^j) / d x^k
  Vec2 Lg1sq_phi;       // L_{g1}^2 phi
  Vec2 Lb_Lg1phi;       // L_{[g1,g2]} L_{g1} phi
  Mat3 Jg1, Jg2;
};

OutputLieData output_lie_data(const SmoothVectorField& g1,
                              const SmoothVectorField& g2,
                              const FlatOutputMap& phi, const Vec3& x);

/// det [L_{g1} phi, L_{[g1,g2]} phi] (columns).
double nondegeneracy_determinant(const OutputLieData& d);

struct FlatnessSample {
  Vec3 x;
  double max_abs_Lg2phi = 0.0;
  double determinant = 0.0;
  int span_rank = 0;
  double span_condition = 0.0;
  bool pass = false;
};

struct FlatnessReport {
  std::vector<FlatnessSample> samples;
  bool pass = false;
  double worst_Lg2phi = 0.0;
  double min_abs_determinant = 0.0;
  double max_span_condition = 0.0;
};

inline constexpr double kLg2PhiTolerance = 1e-10;
inline constexpr double kDeterminantTolerance = 1e-8;
inline constexpr double kSpanConditionLimit = 1e10;

/// Checks L_{g2} phi = 0, the nondegeneracy determinant and the span of
/// {g1, g2, [g1,g2]} at every sample. Failures are reported, not thrown.
FlatnessReport flatness_check(const SmoothVectorField& g1,
                              const SmoothVectorField& g2,
                              const FlatOutputMap& phi,
                              std::span<const Vec3> samples);

}  // namespace flatpmp
