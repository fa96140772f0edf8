#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <numbers>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "report.hpp"

namespace flatpmp::cli {

namespace fs = std::filesystem;

namespace {

bool prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    spdlog::error("cannot create output directory '{}': {}", dir, ec.message());
    return false;
  }
  return true;
}

bool write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) {
    spdlog::error("cannot write {}", path.string());
    return false;
  }
  out << j.dump(2) << '\n';
  return static_cast<bool>(out);
}

// Scenario loading and validation; kSuccess or kConfigError.
int load(const std::string& name, Scenario& sc) {
  try {
    sc = load_scenario(name);
    sc.sim.validate();
    make_system(sc.sim.system);
    make_reference(sc.sim.reference, sc.sim.horizon);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("config error in {}: {}", name, e.what());
    return kConfigError;
  }
  return kSuccess;
}

}  // namespace

int cmd_simulate(const std::string& scenario, const std::string& out_dir) {
  Scenario sc;
  if (const int rc = load(scenario, sc); rc != kSuccess) return rc;
  if (sc.coupling_violated) {
    spdlog::error("config error: weights violate Q = Qbar M^-1 Qbar (residual {:.3e})",
                  sc.coupling_residual);
    return kConfigError;
  }
  const std::string dir = out_dir.empty() ? (sc.output_dir.empty() ? "." : sc.output_dir) : out_dir;
  spdlog::info("simulate {}: dt={} T={} x0=({}, {}, {})", sc.name, sc.sim.dt, sc.sim.horizon,
               sc.sim.x0[0], sc.sim.x0[1], sc.sim.x0[2]);

  SimulationLog log;
  try {
    log = simulate(sc.sim);
  } catch (const SimulationError& e) {
    spdlog::error("runtime error: {}", e.what());
    return kRuntimeError;
  } catch (const Error& e) {
    spdlog::error("runtime error: {}", e.what());
    return kRuntimeError;
  }
  spdlog::info("done in {:.3f} s, final |e| = {:.3e}, J = {:.6f}", log.wall_seconds,
               log.rows.back().norm_e, log.total_cost);
  for (const ModeTransition& m : log.transitions) {
    spdlog::debug("t={:.4f} {}: {} -> {}", m.t, m.which, m.from, m.to);
  }
  if (log.stability_warnings > 0) {
    spdlog::warn("{} samples flagged: stability cannot be guaranteed near the manifold",
                 log.stability_warnings);
  }

  if (!prepare_dir(dir)) return kConfigError;
  {
    std::ofstream csv(fs::path(dir) / "trajectory.csv");
    if (!csv) {
      spdlog::error("cannot write trajectory.csv in {}", dir);
      return kConfigError;
    }
    write_trajectory_csv(csv, log);
  }
  if (!write_json(fs::path(dir) / "summary.json", summary_json(sc, log))) return kConfigError;
  return kSuccess;
}

nlohmann::json run_verification(const Scenario& sc, bool& all_pass) {
  nlohmann::json report;
  report["scenario"] = sc.name;
  all_pass = true;
  const auto gate = [&](const std::string& name, bool pass, nlohmann::json detail) {
    detail["pass"] = pass;
    report["gates"][name] = detail;
    all_pass = all_pass && pass;
    if (pass) {
      spdlog::info("gate {}: pass", name);
    } else {
      spdlog::warn("gate {}: FAIL", name);
    }
  };

  const FlatSystemDescriptor system = make_system(sc.sim.system);
  const ReferenceSignal reference = make_reference(sc.sim.reference, sc.sim.horizon);
  const WeightSet& w = sc.sim.weights;

  // flatness over random states
  {
    std::mt19937_64 rng(sc.oracle.seed);
    std::uniform_real_distribution<double> pos(-5.0, 5.0), ang(-std::numbers::pi, std::numbers::pi);
    std::vector<Vec3> samples;
    for (int i = 0; i < sc.oracle.flatness_samples; ++i) samples.push_back({pos(rng), pos(rng), ang(rng)});
    const FlatnessReport fr = flatness_check(system, samples);
    gate("flatness", fr.pass, flatness_json(fr));
  }

  // weight coupling
  {
    const double scale = std::max(1.0, w.Q().cwiseAbs().maxCoeff());
    const double res = w.coupling_residual();
    gate("coupling", !sc.coupling_violated && res <= 1e-12 * scale,
         {{"residual", number(res)}, {"tolerance", 1e-12 * scale}});
  }

  // closed loop and necessary conditions
  SimulationLog log;
  try {
    log = simulate(system, reference, sc.sim);
  } catch (const Error& e) {
    gate("simulation", false, {{"error", e.what()}});
    return report;
  }
  report["simulation"] = summary_json(sc, log);
  try {
    const ResidualReport rep = pmp_residuals(log, system, w, reference);
    const bool pass = rep.max_costate_ode <= 1e-3 && rep.max_xi1 <= 1e-9 &&
                      rep.max_xi2 <= 1e-12 && rep.terminal <= 1e-12 &&
                      rep.max_error_dynamics <= 1e-8 && rep.bang_sign_mismatches == 0;
    nlohmann::json d = residual_json(rep);
    d["tolerances"] = {{"costate_ode", 1e-3}, {"xi1", 1e-9}, {"xi2", 1e-12},
                       {"terminal", 1e-12}, {"error_dynamics", 1e-8}};
    gate("pmp_residuals", pass, d);
  } catch (const Error& e) {
    gate("pmp_residuals", false, {{"error", e.what()}});
  }

  {
    const PerturbationReport pr =
        perturbation_test(log, system, w, sc.sim.bounds, reference, sc.oracle.perturbation_trials,
                          sc.oracle.perturbation_magnitude, sc.oracle.seed);
    gate("perturbation", pr.violations == 0 && pr.trials > 0, perturbation_json(pr));
  }

  if (sc.oracle.enabled) {
    SimulationConfig shortcfg = sc.sim;
    shortcfg.x0 = sc.oracle.x0;
    shortcfg.start_time = 0.0;
    shortcfg.horizon = sc.oracle.horizon;
    shortcfg.dt = sc.oracle.horizon / sc.oracle.N;
    try {
      const SimulationLog shortlog = simulate(system, reference, shortcfg);
      TranscriptionSettings ts;
      ts.max_iterations = sc.oracle.max_iterations;
      const auto t0 = std::chrono::steady_clock::now();
      const TranscribedOCP free = transcribe_and_solve(system, w, sc.sim.bounds, reference,
                                                       sc.oracle.x0, sc.oracle.horizon,
                                                       sc.oracle.N, {}, ts);
      const TranscribedOCP seeded = transcribe_and_solve(
          system, w, sc.sim.bounds, reference, sc.oracle.x0, sc.oracle.horizon, sc.oracle.N,
          step_average_controls(shortlog), ts);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const double agreement = std::abs(shortlog.total_cost - free.cost) / std::abs(free.cost);
      const double descent = (seeded.seed_cost - seeded.cost) / std::abs(seeded.seed_cost);
      gate("oracle", agreement <= 0.10 && descent < 1e-4,
           {{"closed_loop_cost", number(shortlog.total_cost)},
            {"oracle_cost", number(free.cost)},
            {"oracle_iterations", free.iterations},
            {"oracle_converged", free.converged},
            {"relative_agreement", number(agreement)},
            {"candidate_cost", number(seeded.seed_cost)},
            {"candidate_descended_cost", number(seeded.cost)},
            {"candidate_relative_improvement", number(descent)},
            {"seconds", secs}});
    } catch (const Error& e) {
      gate("oracle", false, {{"error", e.what()}});
    }
  }
  return report;
}

int cmd_verify(const std::string& scenario, const std::string& out_dir) {
  Scenario sc;
  if (const int rc = load(scenario, sc); rc != kSuccess) return rc;
  const std::string dir = out_dir.empty() ? (sc.output_dir.empty() ? "." : sc.output_dir) : out_dir;
  bool pass = false;
  nlohmann::json report;
  try {
    report = run_verification(sc, pass);
  } catch (const std::exception& e) {
    spdlog::error("runtime error: {}", e.what());
    return kRuntimeError;
  }
  report["pass"] = pass;
  if (!prepare_dir(dir) || !write_json(fs::path(dir) / "verification.json", report)) {
    return kConfigError;
  }
  return pass ? kSuccess : kGateFailed;
}

const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> p{"x0", "u_max", "dt", "Qbar-scale"};
  return p;
}

namespace {

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  std::vector<std::string> trimmed;
  for (auto& t : out) {
    const auto b = t.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    trimmed.push_back(t.substr(b, t.find_last_not_of(" \t") - b + 1));
  }
  return trimmed;
}

struct SweepRow {
  std::string value;
  std::string status = "ok";
  std::string message;
  double final_error = 0.0;
  double cost = 0.0;
  Vec3 final_state = Vec3::Zero();
  int transitions = 0;
  double seconds = 0.0;
};

}  // namespace

int cmd_sweep(const std::string& scenario, const std::string& param,
              const std::string& values, const std::string& out_dir) {
  Scenario base;
  if (const int rc = load(scenario, base); rc != kSuccess) return rc;
  const auto& params = sweep_parameters();
  if (std::find(params.begin(), params.end(), param) == params.end()) {
    spdlog::error("config error: unknown sweep parameter '{}' (x0, u_max, dt, Qbar-scale)", param);
    return kConfigError;
  }
  const std::vector<std::string> items = split(values, param == "x0" ? ";" : ",;");
  if (items.empty()) {
    spdlog::error("config error: empty value list");
    return kConfigError;
  }

  std::vector<SimulationConfig> configs;
  try {
    for (const std::string& item : items) {
      SimulationConfig c = base.sim;
      if (param == "x0") {
        const auto parts = split(item, ",");
        if (parts.size() != 3) throw ConfigError("x0 value '" + item + "' needs 3 numbers");
        c.x0 = {parse_scalar(parts[0]), parse_scalar(parts[1]), parse_scalar(parts[2])};
      } else {
        const double v = parse_scalar(item);
        if (param == "u_max") {
          c.bounds = {v, v};
        } else if (param == "dt") {
          c.dt = v;
        } else {
          c.weights = base.sim.weights.scaled_qbar(v);
        }
      }
      c.validate();
      configs.push_back(c);
    }
  } catch (const std::exception& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  }

  std::vector<std::future<SweepRow>> jobs;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      SweepRow row;
      row.value = items[i];
      try {
        const SimulationLog log = simulate(configs[i]);
        row.final_error = log.rows.back().norm_e;
        row.cost = log.total_cost;
        row.final_state = log.rows.back().x;
        row.transitions = static_cast<int>(log.transitions.size());
        row.seconds = log.wall_seconds;
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
      }
      return row;
    }));
  }
  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());

  const std::string dir = out_dir.empty() ? (base.output_dir.empty() ? "." : base.output_dir) : out_dir;
  if (!prepare_dir(dir)) return kConfigError;
  std::ofstream csv(fs::path(dir) / "sweep.csv");
  if (!csv) {
    spdlog::error("cannot write sweep.csv in {}", dir);
    return kConfigError;
  }
  const auto quoted = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  csv << "index,param,value,status,final_error_norm,total_cost,x1,x2,x3,transitions,message\n";
  bool any_failed = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    any_failed = any_failed || r.status != "ok";
    csv << i << ',' << param << ',' << quoted(r.value) << ',' << r.status << ','
        << format_double(r.final_error) << ',' << format_double(r.cost) << ','
        << format_double(r.final_state[0]) << ',' << format_double(r.final_state[1]) << ','
        << format_double(r.final_state[2]) << ',' << r.transitions << ',' << quoted(r.message)
        << '\n';
    if (r.status == "ok") {
      spdlog::info("[{}] {}={}: |e(T)|={:.3e} J={:.6f} ({:.2f} s)", i, param, r.value,
                   r.final_error, r.cost, r.seconds);
    } else {
      spdlog::error("[{}] {}={}: {}", i, param, r.value, r.message);
    }
  }
  return any_failed ? kRuntimeError : kSuccess;
}

}  // namespace flatpmp::cli
