#pragma once

#include <string_view>

#include "flatpmp/geometry.hpp"
#include "flatpmp/reference.hpp"
#include "flatpmp/systems.hpp"
#include "flatpmp/weights.hpp"

namespace flatpmp {

enum class Mode1 { singular_interior, saturated };
enum class Mode2 { bang_off_manifold, saturated_singular, singular_interior };

std::string_view to_string(Mode1 m);
std::string_view to_string(Mode2 m);

struct ControllerTuning {
  /// Manifold detection: |xi2dot| <= eps_switch * max(1, u2_max).
  double eps_switch = 1e-6;
  /// Once on the manifold, leave only when |xi2dot| exceeds hysteresis * threshold.
  double hysteresis = 10.0;
  /// Guard for the division by u1: |u1| < eps_u1 * u1_max.
  double eps_u1 = 1e-8;
  /// Rate [1/s] at which the singular law pulls xi2dot back to zero:
  /// the applied singular input is u2_sing + manifold_gain * xi2dot / f2.
  double manifold_gain = 20.0;
  /// Locate the instant a bang step reaches the manifold and switch there.
  bool locate_switches = true;

  double switch_threshold(const InputBounds& b) const;
  double u1_guard(const InputBounds& b) const { return eps_u1 * b.u1_max; }
  void validate() const;
};

/// Tracking error and the Lie-derivative quantities entering the law.
struct TrackingState {
  Vec2 e = Vec2::Zero();
  Vec2 edot = Vec2::Zero();   // ydot_d - L_{g1} phi * u1, with the applied u1
  Vec2 Lg1phi = Vec2::Zero();
  Vec2 Lbphi = Vec2::Zero();
  Vec2 Lg1sqphi = Vec2::Zero();
};

struct CoefficientSet {
  double A11 = 0, A12 = 0, A21 = 0, A22 = 0;
  double b1 = 0, b2 = 0;
  double det() const { return A11 * A22 - A12 * A21; }
};

struct LyapunovTerms {
  double f1 = 0.0;
  double f2 = 0.0;
  double h2 = 0.0;
  bool h2_defined = false;
};

struct Diagnostics {
  Vec3 lambda = Vec3::Zero();
  double xi1_residual = 0.0;
  double xi2 = 0.0;
  double xi2_dot = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  double h2 = 0.0;
  bool h2_defined = false;
  double V = 0.0;
  bool stability_warning = false;
  bool u1_fallback = false;
};

struct ControlDecision {
  Vec2 u = Vec2::Zero();
  Mode1 mode1 = Mode1::singular_interior;
  Mode2 mode2 = Mode2::bang_off_manifold;
  /// Pre-saturation u1_sing.
  double u1_singular = 0.0;
  /// Manifold-holding u2 before saturation; NaN when not evaluated.
  double u2_singular = 0.0;
  TrackingState state;
  CoefficientSet coefficients;
  Diagnostics diagnostics;
};

/// lambda_k = -e^i Qbar_ij d_k phi^j.
Vec3 costate(const Vec2& e, const WeightSet& weights, const Mat23& dphi);

/// [(ydot_d' M + e' Qbar) L_{g1} phi] / A11. Throws LegendreClebschViolated
/// when A11 <= 1e-12.
double u1_singular(const Vec2& e, const Vec2& Lg1phi, const Vec2& ydot_d,
                   const WeightSet& weights);

/// Clamp to [-bound, bound].
double saturate(double v, double bound);

/// sign with sign(0) = +1.
inline double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

/// -[(edot' M + e' Qbar) L_{[g1,g2]} phi] u1.
double xi2_dot(const TrackingState& s, const WeightSet& weights, double u1);

/// A and b coefficients of the singular u2 law. Throws
/// LegendreClebschViolated on A11 <= 1e-12 or A11 A22 - A12 A21 <= 1e-12.
CoefficientSet coefficients(const TrackingState& s, const WeightSet& weights,
                            const Vec2& ydd_d, double u1);

/// (A11 b2 - A21 b1) / ((A12 A21 - A11 A22) u1). Throws U1NearZero when
/// |u1| < u1_guard.
double u2_singular(const CoefficientSet& c, double u1, double u1_guard);

/// f1, f2 and h2 = f1 / f2 of xi2ddot = f1 - f2 u2 off the manifold, using
/// alpha^3 and beta^3 of the bracket decomposition. h2 is flagged undefined
/// when |f2| < 1e-12. Throws U1NearZero.
LyapunovTerms lyapunov_terms(const TrackingState& s, const WeightSet& weights,
                             const CoefficientSet& c,
                             const BracketDecomposition& decomp, double u1,
                             double xi2dot, double u1_guard);

/// Manifold-holding u2 while u1 sits on its bound (so du1/dt = 0). Uses the
/// full vector r = M edot + Qbar e, which vanishes on the doubly singular arc
/// but not here. Returns the value and the u2-coefficient F2 of xi2ddot.
struct SaturatedSingularLaw {
  double u2 = 0.0;
  double F2 = 0.0;
};
SaturatedSingularLaw u2_singular_saturated_u1(const OutputLieData& d,
                                              const TrackingState& s,
                                              const WeightSet& weights,
                                              const BracketDecomposition& decomp,
                                              const Vec2& ydd_d, double u1);

/// Hysteresis and fallback memory of one closed-loop run.
struct ControllerContext {
  bool on_manifold = false;
  double last_u2 = 0.0;
};

/// One evaluation of the feedback law at a grid point. Updates ctx.
ControlDecision control_step(const FlatSystemDescriptor& system,
                             const WeightSet& weights, const InputBounds& bounds,
                             const ReferenceSignal& reference, const Vec3& x,
                             double t, const ControllerTuning& tuning,
                             ControllerContext& ctx);

/// Bundles the problem data with a context. Within an integration step the
/// grid-point decision is held: its u2 mode (bang sign, singular law) stays
/// fixed while u1 and the singular u2 law are re-evaluated at every stage.
class Controller {
 public:
  Controller(FlatSystemDescriptor system, WeightSet weights, InputBounds bounds,
             ReferenceSignal reference, ControllerTuning tuning = {});

  ControlDecision step(const Vec3& x, double t);

  /// Input applied at an intermediate state while `held` is in force.
  Vec2 stage_input(const Vec3& x, double t, const ControlDecision& held) const;

  /// xi2dot at (x, t) with u1 given by the law.
  double manifold_function(const Vec3& x, double t) const;

  void reset() { ctx_ = {}; }
  /// Marks the manifold as reached, e.g. after a switch located mid-step.
  void enter_manifold() { ctx_.on_manifold = true; }
  const ControllerContext& context() const { return ctx_; }

  const FlatSystemDescriptor& system() const { return system_; }
  const WeightSet& weights() const { return weights_; }
  const InputBounds& bounds() const { return bounds_; }
  const ReferenceSignal& reference() const { return reference_; }
  const ControllerTuning& tuning() const { return tuning_; }

 private:
  FlatSystemDescriptor system_;
  WeightSet weights_;
  InputBounds bounds_;
  ReferenceSignal reference_;
  ControllerTuning tuning_;
  ControllerContext ctx_;
};

}  // namespace flatpmp
