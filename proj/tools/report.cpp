#include "report.hpp"

#include <charconv>
#include <cmath>

namespace flatpmp::cli {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

void write_trajectory_csv(std::ostream& out, const SimulationLog& log) {
  out << "t,x1,x2,x3,u1,u2,mode1,mode2,e1,e2,norm_e,xi2dot,V,f2,h2,J\n";
  std::string line;
  for (const LogRow& r : log.rows) {
    line.clear();
    const auto put = [&line](double v) {
      line += format_double(v);
      line += ',';
    };
    put(r.t);
    put(r.x[0]);
    put(r.x[1]);
    put(r.x[2]);
    put(r.u[0]);
    put(r.u[1]);
    line += to_string(r.mode1);
    line += ',';
    line += to_string(r.mode2);
    line += ',';
    put(r.e[0]);
    put(r.e[1]);
    put(r.norm_e);
    put(r.xi2dot);
    put(r.V);
    put(r.f2);
    put(r.h2);
    line += format_double(r.J);
    line += '\n';
    out << line;
  }
}

nlohmann::json summary_json(const Scenario& sc, const SimulationLog& log) {
  nlohmann::json j;
  j["scenario"] = sc.name;
  j["system"] = sc.sim.system;
  j["dt"] = sc.sim.dt;
  j["horizon"] = sc.sim.horizon;
  j["hold"] = std::string(to_string(sc.sim.hold));
  j["samples"] = log.rows.size();
  const LogRow& last = log.rows.back();
  j["final_time"] = last.t;
  j["final_error_norm"] = number(last.norm_e);
  j["final_state"] = {last.x[0], last.x[1], last.x[2]};
  j["total_cost"] = number(log.total_cost);
  j["running_cost"] = number(log.running_cost);
  j["terminal_cost"] = number(log.terminal_cost);

  nlohmann::json tr = nlohmann::json::array();
  for (const ModeTransition& m : log.transitions) {
    tr.push_back({{"t", m.t}, {"which", m.which}, {"from", m.from}, {"to", m.to}});
  }
  j["mode_transitions"] = tr;

  nlohmann::json warnings = nlohmann::json::array();
  if (log.stability_warnings > 0) {
    double first = 0.0;
    for (const LogRow& r : log.rows) {
      if (r.stability_warning) {
        first = r.t;
        break;
      }
    }
    warnings.push_back({{"kind", "stability"},
                        {"count", log.stability_warnings},
                        {"first_t", first},
                        {"detail", "f2 <= 0 or |h2| >= u2_max near the singular manifold"}});
  }
  if (log.u1_fallbacks > 0) {
    warnings.push_back({{"kind", "u1_fallback"},
                        {"count", log.u1_fallbacks},
                        {"detail", "|u1| below the guard; previous u2 held"}});
  }
  j["warnings"] = warnings;
  j["located_switches"] = log.located_switches;
  return j;
}

nlohmann::json residual_json(const ResidualReport& rep) {
  nlohmann::json j;
  j["terminal"] = number(rep.terminal);
  j["max_costate_ode"] = number(rep.max_costate_ode);
  j["max_xi1"] = number(rep.max_xi1);
  j["max_xi2"] = number(rep.max_xi2);
  j["max_xi2dot"] = number(rep.max_xi2dot);
  j["max_xi2ddot"] = number(rep.max_xi2ddot);
  j["max_error_dynamics"] = number(rep.max_error_dynamics);
  j["singular_segments_checked"] = rep.singular_segments_checked;
  j["segments_skipped"] = rep.segments_skipped;
  j["bang_samples"] = rep.bang_samples;
  j["bang_sign_mismatches"] = rep.bang_sign_mismatches;
  nlohmann::json segs = nlohmann::json::array();
  for (const SegmentResidual& s : rep.segments) {
    segs.push_back({{"t_begin", rep.t[s.segment.begin]},
                    {"t_end", rep.t[s.segment.end - 1]},
                    {"checked", s.checked},
                    {"costate_ode", number(s.costate_ode)},
                    {"xi1", number(s.xi1)},
                    {"xi2dot", number(s.xi2dot)},
                    {"xi2ddot", number(s.xi2ddot)},
                    {"error_dynamics", number(s.error_dynamics)}});
  }
  j["singular_segments"] = segs;
  return j;
}

nlohmann::json perturbation_json(const PerturbationReport& rep) {
  return {{"trials", rep.trials},
          {"violations", rep.violations},
          {"eligible_steps", rep.eligible_steps},
          {"base_cost", number(rep.base_cost)},
          {"replay_cost", number(rep.replay_cost)},
          {"tolerance", number(rep.tolerance)},
          {"min_cost_change", number(rep.min_cost_change)}};
}

nlohmann::json flatness_json(const FlatnessReport& rep) {
  return {{"pass", rep.pass},
          {"samples", rep.samples.size()},
          {"worst_Lg2phi", number(rep.worst_Lg2phi)},
          {"min_abs_determinant", number(rep.min_abs_determinant)},
          {"max_span_condition", number(rep.max_span_condition)}};
}

}  // namespace flatpmp::cli
