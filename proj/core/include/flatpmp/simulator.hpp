#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "flatpmp/controller.hpp"

namespace flatpmp {

struct ReferenceSpec {
  std::string kind = "lissajous";  // "lissajous" or "polynomial"
  double period = 5.0;             // lissajous period
  std::vector<double> coeffs1{0.0};
  std::vector<double> coeffs2{0.0};
};

ReferenceSignal make_reference(const ReferenceSpec& spec, double horizon);

/// How the input is held inside one integration step.
///   zero_order:     the grid-point decision is applied unchanged at all four
///                   RK4 stages.
///   stage_feedback: the grid-point mode is held but the law is re-evaluated
///                   at each stage state (bang keeps its u2, u1 and the
///                   singular u2 follow the state).
enum class InputHold { zero_order, stage_feedback };

std::string_view to_string(InputHold h);

struct SimulationConfig {
  double dt = 1e-3;
  double horizon = 5.0;     // final time T
  double start_time = 0.0;  // the grid is t_k = start_time + k dt up to T
  Vec3 x0 = Vec3::Zero();
  std::string system = "steerable_axle";
  WeightSet weights = WeightSet::from_qbar_m(10.0 * Mat2::Identity(), Mat2::Identity());
  InputBounds bounds;
  ReferenceSpec reference;
  ControllerTuning tuning;
  InputHold hold = InputHold::stage_feedback;

  /// Throws std::invalid_argument on a bad step, horizon or tuning.
  void validate() const;
  /// floor((T - start_time)/dt), tolerant to landing a few ulps below an integer.
  long steps() const;
};

struct LogRow {
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec2 u = Vec2::Zero();
  Mode1 mode1 = Mode1::singular_interior;
  Mode2 mode2 = Mode2::bang_off_manifold;
  Vec2 e = Vec2::Zero();
  Vec2 edot = Vec2::Zero();
  double norm_e = 0.0;
  double xi2dot = 0.0;
  double V = 0.0;
  double f2 = 0.0;
  double h2 = 0.0;
  bool h2_defined = false;
  double xi1_residual = 0.0;
  double xi2 = 0.0;
  double J = 0.0;  // running cost up to t
  bool stability_warning = false;
  bool u1_fallback = false;
  bool switch_located = false;  // the step starting here hit the manifold mid-step
};

/// Inputs actually applied over part of one step: the four RK4 stage inputs
/// on [t0, t0 + h]. A step is one piece, or two when a switch was located.
struct StagePiece {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec2, 4> u{};
};

struct ModeTransition {
  double t = 0.0;
  std::string which;  // "mode1" or "mode2"
  std::string from;
  std::string to;
};

struct SimulationLog {
  std::vector<LogRow> rows;
  /// pieces[k] covers [t_k, t_{k+1}].
  std::vector<std::vector<StagePiece>> pieces;
  std::vector<ModeTransition> transitions;
  double running_cost = 0.0;
  double terminal_cost = 0.0;
  double total_cost = 0.0;
  int stability_warnings = 0;
  int u1_fallbacks = 0;
  int located_switches = 0;
  double wall_seconds = 0.0;
};

/// Classical RK4 step of xdot = g1 u1 + g2 u2 with u held. Throws OutOfDomain.
Vec3 rk4_step(const FlatSystemDescriptor& system, const Vec2& u, const Vec3& x,
              double dt);

/// RK4 over [t0, t0 + h] where stage i (0..3) applies input(i, x_i, t_i).
/// Returns the end state and records the stage inputs in `piece`.
using StageInputFn = std::function<Vec2(int, const Vec3&, double)>;
Vec3 rk4_piece(const FlatSystemDescriptor& system, const Vec3& x, double t0,
               double h, const StageInputFn& input, StagePiece& piece);

/// Closed-loop run on the grid t_k = start_time + k dt. Errors from the
/// system or controller are rethrown as SimulationError tagged with t_k.
SimulationLog simulate(const SimulationConfig& config);

/// Same, with a caller-built system and reference (custom systems, tests).
SimulationLog simulate(const FlatSystemDescriptor& system,
                       const ReferenceSignal& reference,
                       const SimulationConfig& config);

/// J = 1/2 e(T)' Qbar e(T) + trapezoid of 1/2 (e' Q e + edot' M edot) over the
/// rows. Fills rows[k].J with the running integral and returns the total.
double accumulate_cost(std::vector<LogRow>& rows, const WeightSet& weights,
                       double* running = nullptr, double* terminal = nullptr);

/// Integrand 1/2 (e' Q e + edot' M edot).
double running_cost_rate(const Vec2& e, const Vec2& edot, const WeightSet& weights);

struct ReplayResult {
  std::vector<Vec3> states;  // at the grid times
  double cost = 0.0;
};

/// Re-integrates the recorded stage inputs, each shifted by delta[k] on step k
/// and clipped to the bounds (delta may be empty). With no perturbation this
/// reproduces the logged states exactly.
ReplayResult replay(const SimulationLog& log, const FlatSystemDescriptor& system,
                    const WeightSet& weights, const InputBounds& bounds,
                    const ReferenceSignal& reference,
                    const std::vector<Vec2>& delta);

}  // namespace flatpmp
