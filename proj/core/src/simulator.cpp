#include "flatpmp/simulator.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace flatpmp {

ReferenceSignal make_reference(const ReferenceSpec& spec, double horizon) {
  if (spec.kind == "lissajous") return lissajous(spec.period);
  if (spec.kind == "polynomial") {
    if (spec.coeffs1.empty() || spec.coeffs2.empty()) {
      throw std::invalid_argument("polynomial reference needs coefficients for both outputs");
    }
    return polynomial(spec.coeffs1, spec.coeffs2, horizon);
  }
  throw std::invalid_argument("unknown reference kind '" + spec.kind + "'");
}

std::string_view to_string(InputHold h) {
  return h == InputHold::zero_order ? "zero_order" : "stage_feedback";
}

void SimulationConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must be positive");
  }
  if (!(start_time >= 0.0) || !(start_time < horizon)) {
    throw std::invalid_argument("start_time must lie in [0, horizon)");
  }
  if (dt > horizon - start_time) throw std::invalid_argument("dt must not exceed the horizon");
  if ((horizon - start_time) / dt > 1e7) throw std::invalid_argument("more than 1e7 steps");
  if (!x0.allFinite()) throw std::invalid_argument("x0 must be finite");
  bounds.validate();
  tuning.validate();
}

long SimulationConfig::steps() const {
  return static_cast<long>(std::floor((horizon - start_time) / dt * (1.0 + 1e-12)));
}

Vec3 rk4_step(const FlatSystemDescriptor& system, const Vec2& u, const Vec3& x,
              double dt) {
  const Vec3 k1 = vector_field_rhs(system, x, u);
  const Vec3 k2 = vector_field_rhs(system, x + 0.5 * dt * k1, u);
  const Vec3 k3 = vector_field_rhs(system, x + 0.5 * dt * k2, u);
  const Vec3 k4 = vector_field_rhs(system, x + dt * k3, u);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec3 rk4_piece(const FlatSystemDescriptor& system, const Vec3& x, double t0,
               double h, const StageInputFn& input, StagePiece& piece) {
  piece.t0 = t0;
  piece.h = h;
  piece.u[0] = input(0, x, t0);
  const Vec3 k1 = vector_field_rhs(system, x, piece.u[0]);
  const Vec3 x2 = x + 0.5 * h * k1;
  piece.u[1] = input(1, x2, t0 + 0.5 * h);
  const Vec3 k2 = vector_field_rhs(system, x2, piece.u[1]);
  const Vec3 x3 = x + 0.5 * h * k2;
  piece.u[2] = input(2, x3, t0 + 0.5 * h);
  const Vec3 k3 = vector_field_rhs(system, x3, piece.u[2]);
  const Vec3 x4 = x + h * k3;
  piece.u[3] = input(3, x4, t0 + h);
  const Vec3 k4 = vector_field_rhs(system, x4, piece.u[3]);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double running_cost_rate(const Vec2& e, const Vec2& edot, const WeightSet& weights) {
  return 0.5 * (e.dot(weights.Q() * e) + edot.dot(weights.M() * edot));
}

double accumulate_cost(std::vector<LogRow>& rows, const WeightSet& weights,
                       double* running, double* terminal) {
  double J = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double rate = running_cost_rate(rows[k].e, rows[k].edot, weights);
    if (k > 0) J += 0.5 * (rows[k].t - rows[k - 1].t) * (prev + rate);
    rows[k].J = J;
    prev = rate;
  }
  const double term =
      rows.empty() ? 0.0 : 0.5 * rows.back().e.dot(weights.Qbar() * rows.back().e);
  if (running) *running = J;
  if (terminal) *terminal = term;
  return J + term;
}

namespace {

LogRow make_row(double t, const Vec3& x, const ControlDecision& d) {
  LogRow r;
  r.t = t;
  r.x = x;
  r.u = d.u;
  r.mode1 = d.mode1;
  r.mode2 = d.mode2;
  r.e = d.state.e;
  r.edot = d.state.edot;
  r.norm_e = d.state.e.norm();
  r.xi2dot = d.diagnostics.xi2_dot;
  r.V = d.diagnostics.V;
  r.f2 = d.diagnostics.f2;
  r.h2 = d.diagnostics.h2;
  r.h2_defined = d.diagnostics.h2_defined;
  r.xi1_residual = d.diagnostics.xi1_residual;
  r.xi2 = d.diagnostics.xi2;
  r.stability_warning = d.diagnostics.stability_warning;
  r.u1_fallback = d.diagnostics.u1_fallback;
  return r;
}

// Illinois variant of regula falsi for g(tau) = 0 on [0, h] with a sign change.
double locate_root(const std::function<double(double)>& g, double h, double g0,
                   double gh, double tol) {
  double a = 0.0, b = h, fa = g0, fb = gh;
  int side = 0;
  double c = b;
  for (int it = 0; it < 60; ++it) {
    c = (a * fb - b * fa) / (fb - fa);
    const double fc = g(c);
    if (std::abs(fc) <= tol || (b - a) <= 1e-15 * std::max(1.0, h)) break;
    if ((fc > 0.0) == (fb > 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  return c;
}

}  // namespace

SimulationLog simulate(const SimulationConfig& config) {
  config.validate();
  return simulate(make_system(config.system),
                  make_reference(config.reference, config.horizon), config);
}

SimulationLog simulate(const FlatSystemDescriptor& system,
                       const ReferenceSignal& reference,
                       const SimulationConfig& config) {
  config.validate();
  const auto wall0 = std::chrono::steady_clock::now();
  Controller ctrl(system, config.weights, config.bounds, reference, config.tuning);
  const long K = config.steps();
  const double dt = config.dt;
  const double threshold = config.tuning.switch_threshold(config.bounds);

  SimulationLog log;
  log.rows.reserve(static_cast<std::size_t>(K) + 1);
  log.pieces.reserve(static_cast<std::size_t>(K));

  Vec3 x = config.x0;
  for (long k = 0; k <= K; ++k) {
    const double t = config.start_time + static_cast<double>(k) * dt;
    try {
      const ControlDecision dec = ctrl.step(x, t);
      LogRow row = make_row(t, x, dec);
      if (!log.rows.empty()) {
        const LogRow& prev = log.rows.back();
        if (prev.mode1 != row.mode1) {
          log.transitions.push_back({t, "mode1", std::string(to_string(prev.mode1)),
                                     std::string(to_string(row.mode1))});
        }
        if (prev.mode2 != row.mode2) {
          log.transitions.push_back({t, "mode2", std::string(to_string(prev.mode2)),
                                     std::string(to_string(row.mode2))});
        }
      }
      log.stability_warnings += row.stability_warning ? 1 : 0;
      log.u1_fallbacks += row.u1_fallback ? 1 : 0;
      log.rows.push_back(row);
      if (k == K) break;

      std::vector<StagePiece> pieces;
      if (config.hold == InputHold::zero_order) {
        StagePiece p{t, dt, {dec.u, dec.u, dec.u, dec.u}};
        x = rk4_step(system, dec.u, x, dt);
        pieces.push_back(p);
      } else {
        const auto held_input = [&](const ControlDecision& held) {
          return [&ctrl, &held](int, const Vec3& xs, double ts) -> Vec2 {
            return ctrl.stage_input(xs, ts, held);
          };
        };
        StagePiece p;
        Vec3 x_next = rk4_piece(system, x, t, dt, held_input(dec), p);
        bool located = false;
        if (dec.mode2 == Mode2::bang_off_manifold && config.tuning.locate_switches) {
          const double s0 = dec.diagnostics.xi2_dot;
          const double s1 = ctrl.manifold_function(x_next, t + dt);
          if ((s0 > 0.0) != (s1 > 0.0) && std::abs(s1) > threshold) {
            const auto g = [&](double tau) {
              StagePiece scratch;
              return ctrl.manifold_function(
                  rk4_piece(system, x, t, tau, held_input(dec), scratch), t + tau);
            };
            const double tau = locate_root(g, dt, s0, s1, 1e-6 * threshold);
            ControlDecision singular = dec;
            singular.mode2 = Mode2::singular_interior;
            StagePiece first, second;
            Vec3 xm = x;
            if (tau > 0.0) xm = rk4_piece(system, x, t, tau, held_input(dec), first);
            x_next = rk4_piece(system, xm, t + tau, dt - tau, held_input(singular),
                               second);
            if (tau > 0.0) pieces.push_back(first);
            pieces.push_back(second);
            ctrl.enter_manifold();
            located = true;
            ++log.located_switches;
            log.rows.back().switch_located = true;
          }
        }
        if (!located) pieces.push_back(p);
        x = x_next;
      }
      log.pieces.push_back(std::move(pieces));
    } catch (const SimulationError&) {
      throw;
    } catch (const Error& err) {
      throw SimulationError(t, err.what());
    }
  }

  log.total_cost = accumulate_cost(log.rows, config.weights, &log.running_cost,
                                   &log.terminal_cost);
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return log;
}

ReplayResult replay(const SimulationLog& log, const FlatSystemDescriptor& system,
                    const WeightSet& weights, const InputBounds& bounds,
                    const ReferenceSignal& reference,
                    const std::vector<Vec2>& delta) {
  if (log.rows.empty()) return {};
  const auto shifted = [&](const Vec2& u, std::size_t k) -> Vec2 {
    if (delta.empty()) return u;
    const Vec2 v = u + delta[k];
    return {saturate(v[0], bounds.u1_max), saturate(v[1], bounds.u2_max)};
  };

  ReplayResult out;
  out.states.reserve(log.rows.size());
  std::vector<LogRow> rows(log.rows.size());
  Vec3 x = log.rows.front().x;
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    out.states.push_back(x);
    const double t = log.rows[k].t;
    const ReferenceSample ref = reference(t);
    const bool last = k == log.pieces.size();
    const Vec2 u = last ? log.rows[k].u : shifted(log.rows[k].u, k);
    const OutputLieData d = output_lie_data(system.g1, system.g2, system.phi, x);
    rows[k].t = t;
    rows[k].e = ref.y - system.phi.eval(x);
    rows[k].edot = ref.dy - d.Lg1phi * u[0];
    if (last) break;
    for (const StagePiece& p : log.pieces[k]) {
      StagePiece scratch;
      x = rk4_piece(
          system, x, p.t0, p.h,
          [&](int i, const Vec3&, double) { return shifted(p.u[i], k); }, scratch);
    }
  }
  out.cost = accumulate_cost(rows, weights);
  return out;
}

}  // namespace flatpmp
