#include "flatpmp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace flatpmp {

double finite_difference_check(
    const std::function<Eigen::VectorXd(const Vec3&)>& map, const Vec3& x,
    const Eigen::MatrixXd& analytic) {
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double h = std::max(1.0, std::abs(x[k])) * 1e-5;
    Vec3 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const Eigen::VectorXd col = (map(xp) - map(xm)) / (2.0 * h);
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      const double a = analytic(i, k);
      worst = std::max(worst, std::abs(col[i] - a) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

std::vector<Segment> mode_segments(const std::vector<LogRow>& rows) {
  std::vector<Segment> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (out.empty() || out.back().mode1 != rows[k].mode1 ||
        out.back().mode2 != rows[k].mode2) {
      out.push_back({k, k + 1, rows[k].mode1, rows[k].mode2});
    } else {
      out.back().end = k + 1;
    }
  }
  return out;
}

namespace {

// First derivative from samples at -2h, -h, +h, +2h.
template <typename T>
T five_point(const T& m2, const T& m1, const T& p1, const T& p2, double h) {
  return T((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h));
}

}  // namespace

ResidualReport pmp_residuals(const SimulationLog& log,
                             const FlatSystemDescriptor& system,
                             const WeightSet& weights,
                             const ReferenceSignal& reference) {
  const auto& rows = log.rows;
  if (rows.size() < kMinSegmentSamples) {
    throw GridTooCoarse("log has " + std::to_string(rows.size()) + " samples, need " +
                        std::to_string(kMinSegmentSamples));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = rows.size();
  ResidualReport rep;
  rep.t.resize(n);
  rep.costate_ode.assign(n, nan);
  rep.xi1.assign(n, nan);
  rep.xi2.resize(n);
  rep.xi2dot.assign(n, nan);
  rep.xi2ddot.assign(n, nan);
  rep.error_dynamics.assign(n, nan);

  std::vector<Vec3> lambda(n);
  std::vector<OutputLieData> lie(n);
  for (std::size_t k = 0; k < n; ++k) {
    rep.t[k] = rows[k].t;
    lie[k] = output_lie_data(system.g1, system.g2, system.phi, rows[k].x);
    lambda[k] = costate(rows[k].e, weights, lie[k].dphi);
    rep.xi2[k] = std::abs(lambda[k].dot(lie[k].g2));
    rep.max_xi2 = std::max(rep.max_xi2, rep.xi2[k]);
    if (rows[k].mode2 == Mode2::bang_off_manifold) {
      ++rep.bang_samples;
      if (rows[k].xi2dot == 0.0 || sign_of(rows[k].u[1]) != sign_of(rows[k].xi2dot)) {
        ++rep.bang_sign_mismatches;
      }
    }
  }

  // Terminal condition: lambda(T) = -e(T)' Qbar dphi(x(T)), evaluated from
  // the reference and the final state independently of the logged error.
  {
    const LogRow& last = rows.back();
    const Vec2 eT = reference(last.t).y - system.phi.eval(last.x);
    const Vec3 expected = -(system.phi.jacobian(last.x).transpose() * weights.Qbar() * eT);
    rep.terminal = (lambda.back() - expected).cwiseAbs().maxCoeff();
  }

  const Mat2 MinvQbar = weights.Minv() * weights.Qbar();
  for (const Segment& seg : mode_segments(rows)) {
    if (!seg.doubly_interior()) continue;
    SegmentResidual sr;
    sr.segment = seg;
    if (seg.size() < kMinSegmentSamples) {
      ++rep.segments_skipped;
      rep.segments.push_back(sr);
      continue;
    }
    sr.checked = true;
    ++rep.singular_segments_checked;
    for (std::size_t k = seg.begin; k < seg.end; ++k) {
      const LogRow& r = rows[k];
      if (r.u1_fallback) continue;
      rep.xi1[k] = std::abs(r.xi1_residual);
      rep.xi2dot[k] = std::abs(r.xi2dot);
      rep.error_dynamics[k] = (r.edot + MinvQbar * r.e).cwiseAbs().maxCoeff();
      sr.xi1 = std::max(sr.xi1, rep.xi1[k]);
      sr.xi2 = std::max(sr.xi2, rep.xi2[k]);
      sr.xi2dot = std::max(sr.xi2dot, rep.xi2dot[k]);
      sr.error_dynamics = std::max(sr.error_dynamics, rep.error_dynamics[k]);
      // five-point central stencil, all points inside the segment
      if (k < seg.begin + 2 || k + 2 >= seg.end) continue;

      const double h = 0.25 * (rows[k + 2].t - rows[k - 2].t);
      const Vec3 lambda_dot = five_point(lambda[k - 2], lambda[k - 1], lambda[k + 1],
                                         lambda[k + 2], h);
      const OutputLieData& d = lie[k];
      const Vec3 rhs = d.dphi.transpose() * (weights.Q() * r.e) +
                       d.dLg1phi.transpose() * (weights.M() * r.edot) * r.u[0] -
                       (d.Jg1.transpose() * lambda[k]) * r.u[0] -
                       (d.Jg2.transpose() * lambda[k]) * r.u[1];
      rep.costate_ode[k] = (lambda_dot - rhs).cwiseAbs().maxCoeff();
      rep.xi2ddot[k] = std::abs(five_point(rows[k - 2].xi2dot, rows[k - 1].xi2dot,
                                           rows[k + 1].xi2dot, rows[k + 2].xi2dot, h));
      sr.costate_ode = std::max(sr.costate_ode, rep.costate_ode[k]);
      sr.xi2ddot = std::max(sr.xi2ddot, rep.xi2ddot[k]);
    }
    rep.max_costate_ode = std::max(rep.max_costate_ode, sr.costate_ode);
    rep.max_xi1 = std::max(rep.max_xi1, sr.xi1);
    rep.max_xi2dot = std::max(rep.max_xi2dot, sr.xi2dot);
    rep.max_xi2ddot = std::max(rep.max_xi2ddot, sr.xi2ddot);
    rep.max_error_dynamics = std::max(rep.max_error_dynamics, sr.error_dynamics);
    rep.segments.push_back(sr);
  }
  return rep;
}

namespace {

// The discretized problem with reference samples cached on the grid.
class Transcription {
 public:
  Transcription(const FlatSystemDescriptor& system, const WeightSet& weights,
                const ReferenceSignal& reference, const Vec3& x0, double T, int N)
      : system_(system), weights_(weights), x0_(x0), N_(N), dt_(T / N) {
    ref_.reserve(N + 1);
    for (int k = 0; k <= N; ++k) ref_.push_back(reference(k * dt_));
  }

  int N() const { return N_; }
  double dt() const { return dt_; }

  // Node weight of the trapezoid rule.
  double node_weight(int k) const { return (k == 0 || k == N_) ? 0.5 * dt_ : dt_; }

  double node_cost(int k, const Vec3& x, double u1) const {
    const Vec2 e = ref_[k].y - system_.phi.eval(x);
    const Vec2 Lg1phi = system_.phi.jacobian(x) * system_.g1.eval(x);
    const Vec2 edot = ref_[k].dy - Lg1phi * u1;
    double c = node_weight(k) * running_cost_rate(e, edot, weights_);
    if (k == N_) c += 0.5 * e.dot(weights_.Qbar() * e);
    return c;
  }

  // Cost contributions of nodes k..N starting from state x at node k.
  double suffix(int k, Vec3 x, const std::vector<Vec2>& u) const {
    double c = 0.0;
    for (int j = k; j < N_; ++j) {
      c += node_cost(j, x, u[j][0]);
      x = rk4_step(system_, u[j], x, dt_);
    }
    return c + node_cost(N_, x, u[N_ - 1][0]);
  }

  // Full cost; also records states and the node-cost prefix sums.
  double evaluate(const std::vector<Vec2>& u, std::vector<Vec3>* states,
                  std::vector<double>* prefix) const {
    Vec3 x = x0_;
    double c = 0.0;
    if (states) states->assign(N_ + 1, Vec3::Zero());
    if (prefix) prefix->assign(N_ + 1, 0.0);
    for (int j = 0; j < N_; ++j) {
      if (states) (*states)[j] = x;
      if (prefix) (*prefix)[j] = c;
      c += node_cost(j, x, u[j][0]);
      x = rk4_step(system_, u[j], x, dt_);
    }
    if (states) (*states)[N_] = x;
    if (prefix) (*prefix)[N_] = c;
    return c + node_cost(N_, x, u[N_ - 1][0]);
  }

  // Central-difference gradient, reusing the unperturbed prefix.
  std::vector<Vec2> gradient(std::vector<Vec2>& u, double step) const {
    std::vector<Vec3> states;
    std::vector<double> prefix;
    evaluate(u, &states, &prefix);
    std::vector<Vec2> g(N_);
    for (int k = 0; k < N_; ++k) {
      for (int c = 0; c < 2; ++c) {
        const double saved = u[k][c];
        const double h = step * std::max(1.0, std::abs(saved));
        u[k][c] = saved + h;
        const double fp = suffix(k, states[k], u);
        u[k][c] = saved - h;
        const double fm = suffix(k, states[k], u);
        u[k][c] = saved;
        g[k][c] = (fp - fm) / (2.0 * h);
      }
    }
    return g;
  }

 private:
  const FlatSystemDescriptor& system_;
  const WeightSet& weights_;
  Vec3 x0_;
  int N_;
  double dt_;
  std::vector<ReferenceSample> ref_;
};

void project(std::vector<Vec2>& u, const InputBounds& b) {
  for (Vec2& v : u) {
    v[0] = saturate(v[0], b.u1_max);
    v[1] = saturate(v[1], b.u2_max);
  }
}

double dot(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return s;
}

}  // namespace

double transcription_cost(const FlatSystemDescriptor& system,
                          const WeightSet& weights,
                          const ReferenceSignal& reference, const Vec3& x0,
                          double T, const std::vector<Vec2>& u) {
  const Transcription tr(system, weights, reference, x0, T, static_cast<int>(u.size()));
  return tr.evaluate(u, nullptr, nullptr);
}

TranscribedOCP transcribe_and_solve(const FlatSystemDescriptor& system,
                                    const WeightSet& weights,
                                    const InputBounds& bounds,
                                    const ReferenceSignal& reference,
                                    const Vec3& x0, double T, int N,
                                    std::vector<Vec2> seed,
                                    const TranscriptionSettings& settings) {
  if (N < 1 || N > 2000) throw std::invalid_argument("transcription needs 1 <= N <= 2000");
  if (!(T > 0.0)) throw std::invalid_argument("transcription horizon must be positive");
  bounds.validate();
  if (seed.empty()) seed.assign(N, Vec2::Zero());
  if (static_cast<int>(seed.size()) != N) {
    throw std::invalid_argument("seed length must equal N");
  }

  const Transcription tr(system, weights, reference, x0, T, N);
  TranscribedOCP out;
  out.N = N;
  out.dt = tr.dt();
  out.bounds = bounds;
  out.x0 = x0;

  std::vector<Vec2> u = std::move(seed);
  project(u, bounds);
  double J = tr.evaluate(u, nullptr, nullptr);
  out.seed_cost = J;
  out.history.push_back(J);

  std::vector<Vec2> g = tr.gradient(u, settings.fd_step);
  std::vector<Vec2> u_prev, g_prev;
  double alpha = 1.0 / std::max(1.0, std::sqrt(dot(g, g)));

  std::vector<Vec2> trial(N), step(N);
  for (int it = 0; it < settings.max_iterations; ++it) {
    if (!u_prev.empty()) {
      // Barzilai-Borwein initial step from the last accepted move.
      double ss = 0.0, sy = 0.0;
      for (int k = 0; k < N; ++k) {
        const Vec2 s = u[k] - u_prev[k];
        const Vec2 y = g[k] - g_prev[k];
        ss += s.dot(s);
        sy += s.dot(y);
      }
      if (sy > 0.0 && ss > 0.0) alpha = std::clamp(ss / sy, 1e-10, 1e6);
    }

    bool accepted = false;
    double J_trial = J;
    for (int bt = 0; bt < 60; ++bt) {
      for (int k = 0; k < N; ++k) trial[k] = u[k] - alpha * g[k];
      project(trial, bounds);
      for (int k = 0; k < N; ++k) step[k] = trial[k] - u[k];
      const double decrease = dot(g, step);
      if (decrease >= 0.0) break;  // projected step is not a descent direction
      J_trial = tr.evaluate(trial, nullptr, nullptr);
      if (J_trial <= J + settings.armijo * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    out.iterations = it + 1;
    if (!accepted) {
      out.converged = true;
      break;
    }
    const double rel = (J - J_trial) / std::max(std::abs(J), 1e-300);
    u_prev = u;
    g_prev = g;
    u = trial;
    J = J_trial;
    out.history.push_back(J);
    if (rel < settings.relative_tolerance) {
      out.converged = true;
      break;
    }
    g = tr.gradient(u, settings.fd_step);
  }

  out.u = std::move(u);
  out.cost = J;
  return out;
}

std::vector<Vec2> step_average_controls(const SimulationLog& log) {
  std::vector<Vec2> out;
  out.reserve(log.pieces.size());
  for (const auto& pieces : log.pieces) {
    Vec2 sum = Vec2::Zero();
    double total = 0.0;
    for (const StagePiece& p : pieces) {
      sum += p.h * (p.u[0] + 2.0 * p.u[1] + 2.0 * p.u[2] + p.u[3]) / 6.0;
      total += p.h;
    }
    out.push_back(total > 0.0 ? Vec2(sum / total) : Vec2::Zero());
  }
  return out;
}

std::vector<Vec2> grid_controls(const SimulationLog& log) {
  std::vector<Vec2> out;
  out.reserve(log.pieces.size());
  for (std::size_t k = 0; k < log.pieces.size(); ++k) out.push_back(log.rows[k].u);
  return out;
}

PerturbationReport perturbation_test(const SimulationLog& log,
                                     const FlatSystemDescriptor& system,
                                     const WeightSet& weights,
                                     const InputBounds& bounds,
                                     const ReferenceSignal& reference,
                                     int n_trials, double magnitude,
                                     std::uint64_t seed) {
  PerturbationReport rep;
  rep.base_cost = log.total_cost;
  rep.tolerance = 1e-6 * (1.0 + std::abs(log.total_cost));
  const std::size_t K = log.pieces.size();
  rep.replay_cost = replay(log, system, weights, bounds, reference, {}).cost;

  // Maximal runs of steps whose both endpoints are doubly interior singular.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  const auto interior = [&](std::size_t k) {
    const LogRow& r = log.rows[k];
    return r.mode1 == Mode1::singular_interior && r.mode2 == Mode2::singular_interior &&
           !r.u1_fallback;
  };
  for (std::size_t k = 0; k < K; ++k) {
    if (!(interior(k) && interior(k + 1))) continue;
    ++rep.eligible_steps;
    if (!runs.empty() && runs.back().second == k) {
      runs.back().second = k + 1;
    } else {
      runs.push_back({k, k + 1});
    }
  }
  if (runs.empty()) return rep;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec2> delta(K, Vec2::Zero());
  rep.min_cost_change = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < n_trials; ++trial) {
    const auto& run = runs[std::uniform_int_distribution<std::size_t>(0, runs.size() - 1)(rng)];
    const std::size_t len_max = std::min<std::size_t>(run.second - run.first, 50);
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, len_max)(rng);
    const std::size_t start =
        std::uniform_int_distribution<std::size_t>(run.first, run.second - len)(rng);
    const Vec2 du(magnitude * unit(rng), magnitude * unit(rng));
    std::fill(delta.begin(), delta.end(), Vec2::Zero());
    for (std::size_t k = start; k < start + len; ++k) delta[k] = du;
    const double J = replay(log, system, weights, bounds, reference, delta).cost;
    const double change = J - rep.replay_cost;
    rep.cost_changes.push_back(change);
    rep.min_cost_change = std::min(rep.min_cost_change, change);
    ++rep.trials;
    if (change < -rep.tolerance) ++rep.violations;
  }
  return rep;
}

std::vector<std::pair<int, int>> bang_runs(const std::vector<Vec2>& u, double level) {
  std::vector<std::pair<int, int>> out;
  for (int k = 0; k < static_cast<int>(u.size()); ++k) {
    if (std::abs(u[k][1]) < level) continue;
    if (!out.empty() && out.back().second == k) {
      out.back().second = k + 1;
    } else {
      out.push_back({k, k + 1});
    }
  }
  return out;
}

}  // namespace flatpmp
