#include "scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace flatpmp::cli {

namespace {

std::string where(const YAML::Node& node, const std::string& field) {
  const YAML::Mark m = node.Mark();
  std::string s = "field '" + field + "'";
  if (m.line >= 0) s = "line " + std::to_string(m.line + 1) + ", " + s;
  return s;
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                       const std::string& msg) {
  throw ConfigError(where(node, field) + ": " + msg);
}

void reject_unknown(const YAML::Node& map, const std::set<std::string>& allowed,
                    const std::string& prefix) {
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      fail(kv.first, prefix + key, "unknown key");
    }
  }
}

double scalar(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(node, field, "expected a number");
  try {
    return parse_scalar(node.Scalar());
  } catch (const std::invalid_argument& e) {
    fail(node, field, e.what());
  }
}

double positive(const YAML::Node& node, const std::string& field) {
  const double v = scalar(node, field);
  if (!(v > 0.0) || !std::isfinite(v)) fail(node, field, "must be a positive number");
  return v;
}

int positive_int(const YAML::Node& node, const std::string& field) {
  const double v = scalar(node, field);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
    fail(node, field, "must be a positive integer");
  }
  return static_cast<int>(v);
}

bool boolean(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    fail(node, field, "expected true or false");
  }
}

std::vector<double> number_list(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) fail(node, field, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(scalar(node[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Vec3 vec3(const YAML::Node& node, const std::string& field) {
  const auto v = number_list(node, field);
  if (v.size() != 3) fail(node, field, "expected 3 numbers");
  return {v[0], v[1], v[2]};
}

// [a, b] means diag(a, b); [[a, b], [c, d]] is a full matrix.
Mat2 matrix(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence() || node.size() != 2) {
    fail(node, field, "expected [d1, d2] or [[a, b], [c, d]]");
  }
  Mat2 m = Mat2::Zero();
  if (node[0].IsSequence()) {
    for (int r = 0; r < 2; ++r) {
      const auto row = number_list(node[r], field + "[" + std::to_string(r) + "]");
      if (row.size() != 2) fail(node[r], field, "rows must have 2 entries");
      m(r, 0) = row[0];
      m(r, 1) = row[1];
    }
  } else {
    m(0, 0) = scalar(node[0], field + "[0]");
    m(1, 1) = scalar(node[1], field + "[1]");
  }
  return m;
}

void parse_weights(const YAML::Node& node, Scenario& sc) {
  if (!node.IsMap()) fail(node, "weights", "expected a mapping");
  reject_unknown(node, {"Q", "Qbar", "M"}, "weights.");
  if (!node["M"]) fail(node, "weights.M", "required");
  const Mat2 M = matrix(node["M"], "weights.M");
  const bool has_q = static_cast<bool>(node["Q"]);
  const bool has_qbar = static_cast<bool>(node["Qbar"]);
  try {
    if (has_qbar && has_q) {
      const Mat2 Qbar = matrix(node["Qbar"], "weights.Qbar");
      const Mat2 Q = matrix(node["Q"], "weights.Q");
      const WeightSet derived = WeightSet::from_qbar_m(Qbar, M);
      sc.coupling_residual = (Q - derived.Q()).cwiseAbs().maxCoeff();
      sc.coupling_violated = sc.coupling_residual > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff());
      sc.sim.weights = WeightSet::unchecked(Qbar, M, Q);
    } else if (has_qbar) {
      sc.sim.weights = WeightSet::from_qbar_m(matrix(node["Qbar"], "weights.Qbar"), M);
    } else if (has_q) {
      sc.sim.weights = WeightSet::from_q_m(matrix(node["Q"], "weights.Q"), M);
    } else {
      fail(node, "weights", "give Qbar, Q, or both");
    }
  } catch (const flatpmp::Error& e) {
    fail(node, "weights", e.what());
  } catch (const std::invalid_argument& e) {
    fail(node, "weights", e.what());
  }
}

void parse_reference(const YAML::Node& node, Scenario& sc) {
  if (!node.IsMap()) fail(node, "reference", "expected a mapping");
  reject_unknown(node, {"kind", "period", "coeffs1", "coeffs2"}, "reference.");
  ReferenceSpec& r = sc.sim.reference;
  if (node["kind"]) r.kind = node["kind"].as<std::string>();
  if (r.kind != "lissajous" && r.kind != "polynomial") {
    fail(node["kind"], "reference.kind", "must be lissajous or polynomial");
  }
  if (node["period"]) r.period = positive(node["period"], "reference.period");
  if (node["coeffs1"]) r.coeffs1 = number_list(node["coeffs1"], "reference.coeffs1");
  if (node["coeffs2"]) r.coeffs2 = number_list(node["coeffs2"], "reference.coeffs2");
  if (r.kind == "polynomial" && (r.coeffs1.empty() || r.coeffs2.empty())) {
    fail(node, "reference", "polynomial needs coeffs1 and coeffs2");
  }
}

void parse_tuning(const YAML::Node& node, Scenario& sc) {
  if (!node.IsMap()) fail(node, "tuning", "expected a mapping");
  reject_unknown(node, {"eps_switch", "hysteresis", "eps_u1", "manifold_gain", "locate_switches"},
                 "tuning.");
  ControllerTuning& t = sc.sim.tuning;
  if (node["eps_switch"]) t.eps_switch = positive(node["eps_switch"], "tuning.eps_switch");
  if (node["hysteresis"]) {
    t.hysteresis = scalar(node["hysteresis"], "tuning.hysteresis");
    if (!(t.hysteresis >= 1.0)) fail(node["hysteresis"], "tuning.hysteresis", "must be >= 1");
  }
  if (node["eps_u1"]) t.eps_u1 = positive(node["eps_u1"], "tuning.eps_u1");
  if (node["manifold_gain"]) {
    t.manifold_gain = scalar(node["manifold_gain"], "tuning.manifold_gain");
    if (!(t.manifold_gain >= 0.0)) {
      fail(node["manifold_gain"], "tuning.manifold_gain", "must be >= 0");
    }
  }
  if (node["locate_switches"]) {
    t.locate_switches = boolean(node["locate_switches"], "tuning.locate_switches");
  }
}

void parse_oracle(const YAML::Node& node, Scenario& sc) {
  if (!node.IsMap()) fail(node, "oracle", "expected a mapping");
  reject_unknown(node,
                 {"enabled", "horizon", "N", "x0", "max_iterations", "perturbation_trials",
                  "perturbation_magnitude", "seed", "flatness_samples"},
                 "oracle.");
  OracleSettings& o = sc.oracle;
  if (node["enabled"]) o.enabled = boolean(node["enabled"], "oracle.enabled");
  if (node["horizon"]) o.horizon = positive(node["horizon"], "oracle.horizon");
  if (node["N"]) {
    o.N = positive_int(node["N"], "oracle.N");
    if (o.N > 2000) fail(node["N"], "oracle.N", "must be <= 2000");
  }
  if (node["x0"]) o.x0 = vec3(node["x0"], "oracle.x0");
  if (node["max_iterations"]) {
    o.max_iterations = positive_int(node["max_iterations"], "oracle.max_iterations");
  }
  if (node["perturbation_trials"]) {
    o.perturbation_trials = positive_int(node["perturbation_trials"], "oracle.perturbation_trials");
  }
  if (node["perturbation_magnitude"]) {
    o.perturbation_magnitude =
        positive(node["perturbation_magnitude"], "oracle.perturbation_magnitude");
  }
  if (node["seed"]) o.seed = static_cast<std::uint64_t>(positive_int(node["seed"], "oracle.seed"));
  if (node["flatness_samples"]) {
    o.flatness_samples = positive_int(node["flatness_samples"], "oracle.flatness_samples");
  }
}

Scenario fig1(const std::string& name, const Vec3& x0) {
  Scenario sc;
  sc.name = name;
  sc.sim.x0 = x0;
  sc.sim.dt = 1e-3;
  sc.sim.horizon = 5.0;
  sc.sim.system = "steerable_axle";
  sc.sim.weights = WeightSet::from_q_m(100.0 * Mat2::Identity(), Mat2::Identity());
  sc.sim.bounds = {10.0, 10.0};
  sc.sim.reference.kind = "lissajous";
  sc.sim.reference.period = 5.0;
  return sc;
}

}  // namespace

double parse_scalar(const std::string& text) {
  // number, or [sign][number*]pi[/number]
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (s.empty()) throw std::invalid_argument("empty value");
  const auto number = [&](const std::string& part) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number: '" + text + "'");
    }
    if (used != part.size()) throw std::invalid_argument("not a number: '" + text + "'");
    return v;
  };
  const std::size_t p = s.find("pi");
  if (p == std::string::npos) return number(s);

  double factor = 1.0;
  std::string head = s.substr(0, p);
  if (!head.empty() && head.back() == '*') head.pop_back();
  if (head == "-") {
    factor = -1.0;
  } else if (!head.empty() && head != "+") {
    factor = number(head);
  }
  std::string tail = s.substr(p + 2);
  double divisor = 1.0;
  if (!tail.empty()) {
    if (tail[0] != '/') throw std::invalid_argument("not a number: '" + text + "'");
    divisor = number(tail.substr(1));
    if (divisor == 0.0) throw std::invalid_argument("division by zero in '" + text + "'");
  }
  return factor * std::numbers::pi / divisor;
}

std::vector<std::string> builtin_scenarios() {
  return {"fig1_ic1", "fig1_ic2", "fig1_ic3", "fig2"};
}

std::optional<Scenario> builtin_scenario(const std::string& name) {
  const double pi = std::numbers::pi;
  if (name == "fig1_ic1") return fig1(name, {0.0, -1.0, pi / 3.0});
  if (name == "fig1_ic2") return fig1(name, {3.0, -1.0, -pi / 4.0});
  if (name == "fig1_ic3") return fig1(name, {1.0, -0.5, pi / 3.0});
  // The switching-function terms along the first trajectory; f2 and h2 are
  // columns of every trajectory file.
  if (name == "fig2") return fig1(name, {0.0, -1.0, pi / 3.0});
  return std::nullopt;
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(origin + ": top level must be a mapping");
  reject_unknown(root,
                 {"name", "base", "system", "x0", "dt", "horizon", "start_time", "bounds",
                  "weights", "reference", "tuning", "hold", "oracle", "output_dir"},
                 "");

  Scenario sc;
  if (root["base"]) {
    const std::string base = root["base"].as<std::string>();
    auto b = builtin_scenario(base);
    if (!b) fail(root["base"], "base", "unknown built-in scenario '" + base + "'");
    sc = *b;
  } else {
    sc = fig1("scenario", Vec3::Zero());
  }
  sc.name = root["name"] ? root["name"].as<std::string>() : origin;

  if (root["system"]) {
    const std::string sys = root["system"].as<std::string>();
    const auto names = system_names();
    if (std::find(names.begin(), names.end(), sys) == names.end()) {
      fail(root["system"], "system", "unregistered system '" + sys + "'");
    }
    sc.sim.system = sys;
  }
  if (root["x0"]) sc.sim.x0 = vec3(root["x0"], "x0");
  if (root["dt"]) sc.sim.dt = positive(root["dt"], "dt");
  if (root["horizon"]) sc.sim.horizon = positive(root["horizon"], "horizon");
  if (root["start_time"]) {
    sc.sim.start_time = scalar(root["start_time"], "start_time");
    if (!(sc.sim.start_time >= 0.0)) fail(root["start_time"], "start_time", "must be >= 0");
  }
  if (root["bounds"]) {
    const YAML::Node b = root["bounds"];
    if (!b.IsMap()) fail(b, "bounds", "expected a mapping");
    reject_unknown(b, {"u1_max", "u2_max"}, "bounds.");
    if (b["u1_max"]) sc.sim.bounds.u1_max = positive(b["u1_max"], "bounds.u1_max");
    if (b["u2_max"]) sc.sim.bounds.u2_max = positive(b["u2_max"], "bounds.u2_max");
  }
  if (root["weights"]) parse_weights(root["weights"], sc);
  if (root["reference"]) parse_reference(root["reference"], sc);
  if (root["tuning"]) parse_tuning(root["tuning"], sc);
  if (root["hold"]) {
    const std::string h = root["hold"].as<std::string>();
    if (h == "zero_order") {
      sc.sim.hold = InputHold::zero_order;
    } else if (h == "stage_feedback") {
      sc.sim.hold = InputHold::stage_feedback;
    } else {
      fail(root["hold"], "hold", "must be zero_order or stage_feedback");
    }
  }
  if (root["oracle"]) parse_oracle(root["oracle"], sc);
  if (root["output_dir"]) sc.output_dir = root["output_dir"].as<std::string>();

  if (sc.sim.dt > sc.sim.horizon - sc.sim.start_time) {
    fail(root["dt"] ? root["dt"] : root, "dt", "must not exceed horizon - start_time");
  }
  if (!(sc.sim.start_time < sc.sim.horizon)) {
    fail(root["start_time"] ? root["start_time"] : root, "start_time",
         "must be smaller than horizon");
  }
  if ((sc.sim.horizon - sc.sim.start_time) / sc.sim.dt > 1e7) {
    fail(root["dt"] ? root["dt"] : root, "dt", "more than 1e7 steps");
  }
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path);
}

Scenario load_scenario(const std::string& name_or_path) {
  if (auto b = builtin_scenario(name_or_path)) return *b;
  return parse_scenario_file(name_or_path);
}

std::string scenario_schema() {
  return R"(Scenario file (YAML). Every key is optional unless noted; unknown keys are
rejected. A built-in name (fig1_ic1, fig1_ic2, fig1_ic3, fig2) may be given in
place of a path. Angles accept pi, e.g. "pi/3".

  name:        label for reports
  base:        built-in scenario to start from (default: the fig1_ic1 setup)
  system:      steerable_axle | chained_form          (default steerable_axle)
  x0:          [x1, x2, x3]                            (default [0, 0, 0])
  dt:          step [s]                                (default 1e-3)
  horizon:     final time T [s]                        (default 5)
  start_time:  first grid time [s]                     (default 0)
  bounds:      {u1_max: 10, u2_max: 10}
  weights:     {M: .., Qbar: ..} or {M: .., Q: ..}; matrices as [d1, d2]
               or [[a, b], [c, d]]. With Q, Qbar and M all given the
               coupling Q = Qbar M^-1 Qbar is checked, not enforced.
               (default Q = diag(100, 100), M = I)
  reference:   {kind: lissajous, period: 5}
               {kind: polynomial, coeffs1: [c0, c1, ..], coeffs2: [..]}
  tuning:      {eps_switch: 1e-6, hysteresis: 10, eps_u1: 1e-8,
                manifold_gain: 20, locate_switches: true}
  hold:        stage_feedback | zero_order             (default stage_feedback)
  oracle:      {enabled: true, horizon: 1, N: 200, x0: [0.2, -0.8, pi/3],
                max_iterations: 5000, perturbation_trials: 100,
                perturbation_magnitude: 0.01, seed: 7, flatness_samples: 100}
  output_dir:  default for -o
)";
}

}  // namespace flatpmp::cli
