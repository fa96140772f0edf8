#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flatpmp/simulator.hpp"

namespace flatpmp::cli {

/// Bad scenario content; the message carries the line and field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleSettings {
  bool enabled = true;
  double horizon = 1.0;
  int N = 200;
  Vec3 x0{0.2, -0.8, 1.0471975511965976};
  int max_iterations = 5000;
  int perturbation_trials = 100;
  double perturbation_magnitude = 0.01;
  std::uint64_t seed = 7;
  int flatness_samples = 100;
};

struct Scenario {
  std::string name;
  SimulationConfig sim;
  OracleSettings oracle;
  /// Q was given next to Qbar and M and does not satisfy the coupling.
  bool coupling_violated = false;
  double coupling_residual = 0.0;
  std::string output_dir;  // optional default for -o
};

/// Names accepted in place of a scenario path.
std::vector<std::string> builtin_scenarios();
std::optional<Scenario> builtin_scenario(const std::string& name);

Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<string>");
Scenario parse_scenario_file(const std::string& path);

/// A built-in name or a path to a YAML file.
Scenario load_scenario(const std::string& name_or_path);

/// Scalar that may be written as a number or with pi, e.g. "pi/3", "-2*pi".
/// Throws std::invalid_argument; callers attach the file location.
double parse_scalar(const std::string& text);

/// Documentation of every key, printed by --help.
std::string scenario_schema();

}  // namespace flatpmp::cli
