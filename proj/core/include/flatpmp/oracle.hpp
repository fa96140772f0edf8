#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "flatpmp/simulator.hpp"

namespace flatpmp {

/// Max entrywise error between a central-difference Jacobian of `map` at x and
/// `analytic`, each entry scaled by max(1, |analytic entry|).
double finite_difference_check(
    const std::function<Eigen::VectorXd(const Vec3&)>& map, const Vec3& x,
    const Eigen::MatrixXd& analytic);

/// A maximal run of log rows [begin, end) sharing both mode labels.
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  Mode1 mode1 = Mode1::singular_interior;
  Mode2 mode2 = Mode2::bang_off_manifold;
  bool doubly_interior() const {
    return mode1 == Mode1::singular_interior && mode2 == Mode2::singular_interior;
  }
  std::size_t size() const { return end - begin; }
};

std::vector<Segment> mode_segments(const std::vector<LogRow>& rows);

struct SegmentResidual {
  Segment segment;
  bool checked = false;  // false when too short to difference
  double costate_ode = 0.0;
  double xi1 = 0.0;
  double xi2 = 0.0;
  double xi2dot = 0.0;
  double xi2ddot = 0.0;
  double error_dynamics = 0.0;  // |edot + M^{-1} Qbar e|
};

/// Necessary-condition residuals along a closed-loop log. Per-sample series
/// are NaN where a quantity is not evaluated (segment ends, bang rows for the
/// singular-arc quantities).
struct ResidualReport {
  std::vector<double> t;
  std::vector<double> costate_ode;
  std::vector<double> xi1;
  std::vector<double> xi2;
  std::vector<double> xi2dot;
  std::vector<double> xi2ddot;
  std::vector<double> error_dynamics;
  std::vector<SegmentResidual> segments;

  double terminal = 0.0;
  // maxima over checked doubly-interior singular segments
  double max_costate_ode = 0.0;
  double max_xi1 = 0.0;
  double max_xi2dot = 0.0;
  double max_xi2ddot = 0.0;
  double max_error_dynamics = 0.0;
  // over every row
  double max_xi2 = 0.0;

  int singular_segments_checked = 0;
  int segments_skipped = 0;
  int bang_samples = 0;
  int bang_sign_mismatches = 0;
};

inline constexpr std::size_t kMinSegmentSamples = 10;

/// Reconstructs the closed-form costate along the log, differentiates it by
/// five-point central differences and compares with the costate equation, on doubly
/// interior singular segments. Segments shorter than kMinSegmentSamples are
/// skipped; GridTooCoarse is thrown when the whole log is that short.
ResidualReport pmp_residuals(const SimulationLog& log,
                             const FlatSystemDescriptor& system,
                             const WeightSet& weights,
                             const ReferenceSignal& reference);

struct TranscriptionSettings {
  int max_iterations = 5000;
  double relative_tolerance = 1e-8;
  double armijo = 1e-4;
  /// Central-difference step for the gradient.
  double fd_step = 1e-6;
};

struct TranscribedOCP {
  int N = 0;
  double dt = 0.0;
  std::vector<Vec2> u;
  InputBounds bounds;
  Vec3 x0 = Vec3::Zero();
  double seed_cost = 0.0;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Accepted iterate costs; non-increasing by construction of the line search.
  std::vector<double> history;
};

/// Discretized cost of a piecewise-constant control grid: RK4 under zero-order
/// hold, trapezoidal running cost with edot_k built from u_k (u_{N-1} at the
/// last node) and the terminal term.
double transcription_cost(const FlatSystemDescriptor& system,
                          const WeightSet& weights,
                          const ReferenceSignal& reference, const Vec3& x0,
                          double T, const std::vector<Vec2>& u);

/// Projected gradient with finite-difference gradients and Armijo
/// backtracking on the box bounds. The seed is projected first; an empty seed
/// means u = 0. Stops when the relative decrease falls below the tolerance or
/// after max_iterations (converged = false).
TranscribedOCP transcribe_and_solve(const FlatSystemDescriptor& system,
                                    const WeightSet& weights,
                                    const InputBounds& bounds,
                                    const ReferenceSignal& reference,
                                    const Vec3& x0, double T, int N,
                                    std::vector<Vec2> seed,
                                    const TranscriptionSettings& settings = {});

/// One control per step of a log: the stage inputs averaged with the RK4
/// weights and piece lengths.
std::vector<Vec2> step_average_controls(const SimulationLog& log);

/// Grid-point controls u(t_k), k = 0..N-1.
std::vector<Vec2> grid_controls(const SimulationLog& log);

struct PerturbationReport {
  int trials = 0;
  int violations = 0;
  std::size_t eligible_steps = 0;
  double base_cost = 0.0;
  double replay_cost = 0.0;     // unperturbed replay, equals base_cost
  double tolerance = 0.0;       // 1e-6 (1 + J)
  double min_cost_change = 0.0; // most negative J(u + du) - J(u)
  std::vector<double> cost_changes;
};

/// Random piecewise-constant perturbations on windows of steps where both
/// modes are interior singular; the recorded stage inputs are replayed with the
/// perturbation added and clipped.
PerturbationReport perturbation_test(const SimulationLog& log,
                                     const FlatSystemDescriptor& system,
                                     const WeightSet& weights,
                                     const InputBounds& bounds,
                                     const ReferenceSignal& reference,
                                     int n_trials, double magnitude,
                                     std::uint64_t seed = 7);

/// Bang intervals of a control grid: maximal runs with |u2| >= level.
std::vector<std::pair<int, int>> bang_runs(const std::vector<Vec2>& u, double level);

}  // namespace flatpmp
