#include "flatpmp/geometry.hpp"

#include <limits>

namespace flatpmp {

SmoothVectorField SmoothVectorField::analytic(EvalFn eval, JacobianFn jacobian) {
  SmoothVectorField f;
  f.eval_ = std::move(eval);
  f.jacobian_ = std::move(jacobian);
  f.source_ = DerivativeSource::analytic;
  return f;
}

SmoothVectorField SmoothVectorField::finite_difference(EvalFn eval) {
  SmoothVectorField f;
  f.eval_ = std::move(eval);
  f.jacobian_ = [e = f.eval_](const Vec3& x) -> Mat3 {
    return fd_jacobian<3>(e, x);
  };
  f.source_ = DerivativeSource::finite_difference;
  return f;
}

SmoothVectorField SmoothVectorField::combined(double a,
                                              const SmoothVectorField& other,
                                              double b) const {
  SmoothVectorField f;
  f.eval_ = [a, b, g = eval_, h = other.eval_](const Vec3& x) -> Vec3 {
    return a * g(x) + b * h(x);
  };
  f.jacobian_ = [a, b, g = jacobian_, h = other.jacobian_](const Vec3& x) -> Mat3 {
    return a * g(x) + b * h(x);
  };
  f.source_ = (source_ == DerivativeSource::analytic &&
               other.source_ == DerivativeSource::analytic)
                  ? DerivativeSource::analytic
                  : DerivativeSource::finite_difference;
  return f;
}

FlatOutputMap FlatOutputMap::analytic(EvalFn eval, JacobianFn jacobian,
                                      HessianFn hessian) {
  FlatOutputMap m;
  m.eval_ = std::move(eval);
  m.jacobian_ = std::move(jacobian);
  m.hessian_ = std::move(hessian);
  m.source_ = DerivativeSource::analytic;
  return m;
}

FlatOutputMap FlatOutputMap::finite_difference(EvalFn eval) {
  FlatOutputMap m;
  m.eval_ = std::move(eval);
  m.jacobian_ = [e = m.eval_](const Vec3& x) -> Mat23 {
    return fd_jacobian<2>(e, x);
  };
  m.hessian_ = [e = m.eval_](const Vec3& x) -> OutputHessian {
    OutputHessian H;
    for (int i = 0; i < 2; ++i) {
      const std::function<Vec3(const Vec3&)> grad = [&e, i](const Vec3& p) -> Vec3 {
        return fd_jacobian<2>(e, p).row(i).transpose();
      };
      const Mat3 Hi = fd_jacobian<3>(grad, x);
      H[i] = 0.5 * (Hi + Hi.transpose());
    }
    return H;
  };
  m.source_ = DerivativeSource::finite_difference;
  return m;
}

double lie_derivative(const SmoothVectorField& field, double /*value*/,
                      const Vec3& gradient, const Vec3& x) {
  return gradient.dot(field.eval(x));
}

Vec3 lie_bracket(const SmoothVectorField& g1, const SmoothVectorField& g2,
                 const Vec3& x) {
  return g2.jacobian(x) * g1.eval(x) - g1.jacobian(x) * g2.eval(x);
}

SmoothVectorField bracket_field(const SmoothVectorField& g1,
                                const SmoothVectorField& g2) {
  return SmoothVectorField::finite_difference(
      [g1, g2](const Vec3& x) -> Vec3 { return lie_bracket(g1, g2, x); });
}

namespace {

double condition_number(const Mat3& B) {
  const Eigen::JacobiSVD<Mat3> svd(B);
  const auto& s = svd.singularValues();
  if (s[2] <= 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / s[2];
}

}  // namespace

BracketDecomposition decompose_higher_brackets(const SmoothVectorField& g1,
                                               const SmoothVectorField& g2,
                                               const Vec3& x) {
  const SmoothVectorField b = bracket_field(g1, g2);
  Mat3 basis;
  basis.col(0) = g1.eval(x);
  basis.col(1) = g2.eval(x);
  basis.col(2) = b.eval(x);

  BracketDecomposition out;
  out.condition = condition_number(basis);
  if (!(out.condition <= kSpanConditionLimit)) {
    throw SpanDeficient("span{g1, g2, [g1,g2]} is degenerate (condition " +
                        std::to_string(out.condition) + ")");
  }

  const Vec3 g1b = lie_bracket(g1, b, x);
  const Vec3 g2b = lie_bracket(g2, b, x);
  const Eigen::PartialPivLU<Mat3> lu(basis);
  out.alpha = lu.solve(g1b);
  out.beta = lu.solve(g2b);
  out.residual = std::max((basis * out.alpha - g1b).cwiseAbs().maxCoeff(),
                          (basis * out.beta - g2b).cwiseAbs().maxCoeff());
  return out;
}

OutputLieData output_lie_data(const SmoothVectorField& g1,
                              const SmoothVectorField& g2,
                              const FlatOutputMap& phi, const Vec3& x) {
  OutputLieData d;
  d.g1 = g1.eval(x);
  d.g2 = g2.eval(x);
  d.Jg1 = g1.jacobian(x);
  d.Jg2 = g2.jacobian(x);
  d.bracket = d.Jg2 * d.g1 - d.Jg1 * d.g2;
  d.dphi = phi.jacobian(x);
  const OutputHessian H = phi.hessian(x);

  d.Lg1phi = d.dphi * d.g1;
  d.Lg2phi = d.dphi * d.g2;
  d.Lbphi = d.dphi * d.bracket;

  // d/dx^k (g1^l d_l phi^j) = d_l phi^j d_k g1^l + g1^l d_l d_k phi^j
  for (int j = 0; j < 2; ++j) {
    d.dLg1phi.row(j) = (d.Jg1.transpose() * d.dphi.row(j).transpose() +
                        H[j] * d.g1)
                           .transpose();
  }
  d.Lg1sq_phi = d.dLg1phi * d.g1;
  d.Lb_Lg1phi = d.dLg1phi * d.bracket;
  return d;
}

double nondegeneracy_determinant(const OutputLieData& d) {
  return d.Lg1phi[0] * d.Lbphi[1] - d.Lbphi[0] * d.Lg1phi[1];
}

FlatnessReport flatness_check(const SmoothVectorField& g1,
                              const SmoothVectorField& g2,
                              const FlatOutputMap& phi,
                              std::span<const Vec3> samples) {
  FlatnessReport report;
  report.pass = !samples.empty();
  report.min_abs_determinant = std::numeric_limits<double>::infinity();
  for (const Vec3& x : samples) {
    FlatnessSample s;
    s.x = x;
    const OutputLieData d = output_lie_data(g1, g2, phi, x);
    s.max_abs_Lg2phi = d.Lg2phi.cwiseAbs().maxCoeff();
    s.determinant = nondegeneracy_determinant(d);

    Mat3 basis;
    basis << d.g1, d.g2, d.bracket;
    const Eigen::JacobiSVD<Mat3> svd(basis);
    const auto& sv = svd.singularValues();
    s.span_rank = static_cast<int>((sv.array() > sv[0] * 1e-12).count());
    s.span_condition = sv[2] > 0.0 ? sv[0] / sv[2]
                                   : std::numeric_limits<double>::infinity();

    s.pass = s.max_abs_Lg2phi <= kLg2PhiTolerance &&
             std::abs(s.determinant) >= kDeterminantTolerance &&
             s.span_rank == 3 && s.span_condition <= kSpanConditionLimit;

    report.worst_Lg2phi = std::max(report.worst_Lg2phi, s.max_abs_Lg2phi);
    report.min_abs_determinant =
        std::min(report.min_abs_determinant, std::abs(s.determinant));
    report.max_span_condition =
        std::max(report.max_span_condition, s.span_condition);
    report.pass = report.pass && s.pass;
    report.samples.push_back(s);
  }
  return report;
}

}  // namespace flatpmp
