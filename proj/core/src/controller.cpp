#include "flatpmp/controller.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flatpmp {

std::string_view to_string(Mode1 m) {
  switch (m) {
    case Mode1::singular_interior: return "singular_interior";
    case Mode1::saturated: return "saturated";
  }
  return "unknown";
}

std::string_view to_string(Mode2 m) {
  switch (m) {
    case Mode2::bang_off_manifold: return "bang_off_manifold";
    case Mode2::saturated_singular: return "saturated_singular";
    case Mode2::singular_interior: return "singular_interior";
  }
  return "unknown";
}

double ControllerTuning::switch_threshold(const InputBounds& b) const {
  return eps_switch * std::max(1.0, b.u2_max);
}

void ControllerTuning::validate() const {
  if (!(eps_switch > 0.0) || !(hysteresis >= 1.0) || !(eps_u1 > 0.0) ||
      !(manifold_gain >= 0.0)) {
    throw std::invalid_argument(
        "tuning requires eps_switch > 0, hysteresis >= 1, eps_u1 > 0, "
        "manifold_gain >= 0");
  }
}

Vec3 costate(const Vec2& e, const WeightSet& weights, const Mat23& dphi) {
  return -(dphi.transpose() * (weights.Qbar() * e));
}

double u1_singular(const Vec2& e, const Vec2& Lg1phi, const Vec2& ydot_d,
                   const WeightSet& weights) {
  const double A11 = Lg1phi.dot(weights.M() * Lg1phi);
  if (!(A11 > 1e-12)) {
    throw LegendreClebschViolated("A11 = " + std::to_string(A11) + " <= 1e-12");
  }
  return (weights.M() * ydot_d + weights.Qbar() * e).dot(Lg1phi) / A11;
}

double saturate(double v, double bound) {
  return std::clamp(v, -bound, bound);
}

double xi2_dot(const TrackingState& s, const WeightSet& weights, double u1) {
  return -(weights.M() * s.edot + weights.Qbar() * s.e).dot(s.Lbphi) * u1;
}

CoefficientSet coefficients(const TrackingState& s, const WeightSet& weights,
                            const Vec2& ydd_d, double u1) {
  const Mat2& M = weights.M();
  CoefficientSet c;
  c.A11 = s.Lg1phi.dot(M * s.Lg1phi);
  c.A12 = s.Lbphi.dot(M * s.Lg1phi);
  c.A21 = s.Lg1phi.dot(M * s.Lbphi);
  c.A22 = s.Lbphi.dot(M * s.Lbphi);
  const Vec2 drive = M * (ydd_d - s.Lg1sqphi * (u1 * u1)) - weights.Q() * s.e;
  c.b1 = drive.dot(s.Lg1phi);
  c.b2 = drive.dot(s.Lbphi);
  if (!(c.A11 > 1e-12)) {
    throw LegendreClebschViolated("A11 = " + std::to_string(c.A11) + " <= 1e-12");
  }
  if (!(c.det() > 1e-12)) {
    throw LegendreClebschViolated("A11*A22 - A12*A21 = " + std::to_string(c.det()) +
                                  " <= 1e-12");
  }
  return c;
}

double u2_singular(const CoefficientSet& c, double u1, double u1_guard) {
  if (!(std::abs(u1) >= u1_guard)) {
    throw U1NearZero("|u1| below the singular-division guard");
  }
  return (c.A11 * c.b2 - c.A21 * c.b1) / ((c.A12 * c.A21 - c.A11 * c.A22) * u1);
}

LyapunovTerms lyapunov_terms(const TrackingState& /*s*/, const WeightSet& /*weights*/,
                             const CoefficientSet& c,
                             const BracketDecomposition& decomp, double u1,
                             double xi2dot, double u1_guard) {
  if (!(std::abs(u1) >= u1_guard)) {
    throw U1NearZero("|u1| below the singular-division guard");
  }
  const double alpha3 = decomp.alpha[2];
  const double beta3 = decomp.beta[2];
  const double u1sq = u1 * u1;
  LyapunovTerms out;
  out.f1 = -(c.A11 * c.b2 - c.A21 * c.b1) / c.A11 * u1 +
           (alpha3 * u1sq * c.A11 + c.b1) / (c.A11 * u1) * xi2dot;
  out.f2 = c.det() * u1sq / c.A11 -
           (beta3 + (c.A12 + c.A21) / c.A11 + xi2dot / u1sq) * xi2dot;
  out.h2_defined = std::abs(out.f2) >= 1e-12;
  out.h2 = out.h2_defined ? out.f1 / out.f2
                          : std::numeric_limits<double>::quiet_NaN();
  return out;
}

SaturatedSingularLaw u2_singular_saturated_u1(const OutputLieData& d,
                                              const TrackingState& s,
                                              const WeightSet& weights,
                                              const BracketDecomposition& decomp,
                                              const Vec2& ydd_d, double u1) {
  const Mat2& M = weights.M();
  const Vec2 r = M * s.edot + weights.Qbar() * s.e;
  // L_{g2} L_b phi and L_{g1} L_b phi expressed through the decomposition;
  // L_{g2} phi = 0 removes the g2 components.
  const Vec2 Lg2_Lbphi = decomp.beta[0] * s.Lg1phi + decomp.beta[2] * s.Lbphi;
  const Vec2 Lg1_Lbphi =
      decomp.alpha[0] * s.Lg1phi + decomp.alpha[2] * s.Lbphi + d.Lb_Lg1phi;
  const double den = s.Lbphi.dot(M * s.Lbphi) * u1 + r.dot(Lg2_Lbphi);
  const double num =
      -((M * (ydd_d - s.Lg1sqphi * (u1 * u1))).dot(s.Lbphi) +
        (weights.Qbar() * s.edot).dot(s.Lbphi) + u1 * r.dot(Lg1_Lbphi));
  SaturatedSingularLaw law;
  law.F2 = u1 * den;
  law.u2 = std::abs(den) > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  return law;
}

namespace {

struct LawPoint {
  OutputLieData lie;
  ReferenceSample ref;
  TrackingState state;
  double u1_sing = 0.0;
  double u1 = 0.0;
  Mode1 mode1 = Mode1::singular_interior;
  double xi2dot = 0.0;
};

LawPoint evaluate_point(const FlatSystemDescriptor& system, const WeightSet& w,
                        const InputBounds& bounds,
                        const ReferenceSignal& reference, const Vec3& x,
                        double t) {
  if (!system.admissible(x)) {
    throw OutOfDomain("state outside the admissible domain of " + system.name);
  }
  LawPoint p;
  p.lie = output_lie_data(system.g1, system.g2, system.phi, x);
  p.ref = reference(t);
  p.state.e = p.ref.y - system.phi.eval(x);
  p.state.Lg1phi = p.lie.Lg1phi;
  p.state.Lbphi = p.lie.Lbphi;
  p.state.Lg1sqphi = p.lie.Lg1sq_phi;
  p.u1_sing = u1_singular(p.state.e, p.lie.Lg1phi, p.ref.dy, w);
  p.u1 = saturate(p.u1_sing, bounds.u1_max);
  p.mode1 = std::abs(p.u1_sing) >= bounds.u1_max ? Mode1::saturated
                                                 : Mode1::singular_interior;
  p.state.edot = p.ref.dy - p.lie.Lg1phi * p.u1;
  p.xi2dot = xi2_dot(p.state, w, p.u1);
  return p;
}

struct SingularCandidate {
  double u2_sing = 0.0;  // pure manifold-holding value
  double applied = 0.0;  // with the manifold attraction term
};

SingularCandidate singular_candidate(const FlatSystemDescriptor& system,
                                     const WeightSet& w,
                                     const ControllerTuning& tuning,
                                     const LawPoint& p, const CoefficientSet& c,
                                     double u1_guard, const Vec3& x) {
  SingularCandidate out;
  double F2 = 0.0;
  if (p.mode1 == Mode1::singular_interior) {
    out.u2_sing = u2_singular(c, p.u1, u1_guard);
    F2 = c.det() * p.u1 * p.u1 / c.A11;
  } else {
    const BracketDecomposition decomp =
        decompose_higher_brackets(system.g1, system.g2, x);
    const SaturatedSingularLaw law =
        u2_singular_saturated_u1(p.lie, p.state, w, decomp, p.ref.ddy, p.u1);
    out.u2_sing = law.u2;
    F2 = law.F2;
  }
  out.applied = out.u2_sing;
  if (tuning.manifold_gain > 0.0 && std::abs(F2) > 1e-12) {
    out.applied += tuning.manifold_gain * p.xi2dot / F2;
  }
  return out;
}

}  // namespace

ControlDecision control_step(const FlatSystemDescriptor& system,
                             const WeightSet& weights, const InputBounds& bounds,
                             const ReferenceSignal& reference, const Vec3& x,
                             double t, const ControllerTuning& tuning,
                             ControllerContext& ctx) {
  const LawPoint p = evaluate_point(system, weights, bounds, reference, x, t);
  const double threshold = tuning.switch_threshold(bounds);
  const double guard = tuning.u1_guard(bounds);

  ControlDecision dec;
  dec.mode1 = p.mode1;
  dec.u1_singular = p.u1_sing;
  dec.state = p.state;
  dec.coefficients = coefficients(p.state, weights, p.ref.ddy, p.u1);
  dec.u2_singular = std::numeric_limits<double>::quiet_NaN();

  const bool on_manifold = ctx.on_manifold
                               ? std::abs(p.xi2dot) <= tuning.hysteresis * threshold
                               : std::abs(p.xi2dot) <= threshold;
  const bool fallback = std::abs(p.u1) < guard;

  double u2 = 0.0;
  if (!on_manifold) {
    u2 = sign_of(p.xi2dot) * bounds.u2_max;
    dec.mode2 = Mode2::bang_off_manifold;
  } else {
    double candidate = ctx.last_u2;
    if (!fallback) {
      const SingularCandidate sc =
          singular_candidate(system, weights, tuning, p, dec.coefficients, guard, x);
      dec.u2_singular = sc.u2_sing;
      candidate = sc.applied;
    }
    if (std::abs(candidate) >= bounds.u2_max) {
      u2 = sign_of(candidate) * bounds.u2_max;
      dec.mode2 = Mode2::saturated_singular;
    } else {
      u2 = candidate;
      dec.mode2 = Mode2::singular_interior;
    }
  }
  dec.u = {p.u1, u2};

  Diagnostics& diag = dec.diagnostics;
  diag.lambda = costate(p.state.e, weights, p.lie.dphi);
  diag.xi1_residual = -(weights.M() * p.state.edot).dot(p.lie.Lg1phi) +
                      diag.lambda.dot(p.lie.g1);
  diag.xi2 = diag.lambda.dot(p.lie.g2);
  diag.xi2_dot = p.xi2dot;
  diag.V = 0.5 * p.xi2dot * p.xi2dot;
  diag.u1_fallback = fallback && on_manifold;
  if (!fallback) {
    const BracketDecomposition decomp =
        decompose_higher_brackets(system.g1, system.g2, x);
    const LyapunovTerms lt = lyapunov_terms(p.state, weights, dec.coefficients,
                                            decomp, p.u1, p.xi2dot, guard);
    diag.f1 = lt.f1;
    diag.f2 = lt.f2;
    diag.h2 = lt.h2;
    diag.h2_defined = lt.h2_defined;
    const bool near_manifold =
        std::abs(p.xi2dot) <= tuning.hysteresis * threshold;
    diag.stability_warning =
        near_manifold &&
        (lt.f2 <= 0.0 || (lt.h2_defined && std::abs(lt.h2) >= bounds.u2_max));
  } else {
    diag.f1 = diag.f2 = diag.h2 = std::numeric_limits<double>::quiet_NaN();
    diag.h2_defined = false;
  }

  ctx.on_manifold = on_manifold;
  ctx.last_u2 = u2;
  return dec;
}

Controller::Controller(FlatSystemDescriptor system, WeightSet weights,
                       InputBounds bounds, ReferenceSignal reference,
                       ControllerTuning tuning)
    : system_(std::move(system)),
      weights_(std::move(weights)),
      bounds_(bounds),
      reference_(std::move(reference)),
      tuning_(tuning) {
  bounds_.validate();
  tuning_.validate();
}

ControlDecision Controller::step(const Vec3& x, double t) {
  return control_step(system_, weights_, bounds_, reference_, x, t, tuning_, ctx_);
}

Vec2 Controller::stage_input(const Vec3& x, double t,
                             const ControlDecision& held) const {
  const LawPoint p = evaluate_point(system_, weights_, bounds_, reference_, x, t);
  if (held.mode2 == Mode2::bang_off_manifold) return {p.u1, held.u[1]};
  const double guard = tuning_.u1_guard(bounds_);
  if (std::abs(p.u1) < guard) return {p.u1, held.u[1]};
  const CoefficientSet c = coefficients(p.state, weights_, p.ref.ddy, p.u1);
  const SingularCandidate sc =
      singular_candidate(system_, weights_, tuning_, p, c, guard, x);
  return {p.u1, saturate(sc.applied, bounds_.u2_max)};
}

double Controller::manifold_function(const Vec3& x, double t) const {
  return evaluate_point(system_, weights_, bounds_, reference_, x, t).xi2dot;
}

}  // namespace flatpmp
