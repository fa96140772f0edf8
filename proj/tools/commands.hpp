#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenario.hpp"

namespace flatpmp::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 1,
  kRuntimeError = 2,
  kGateFailed = 3,
};

/// Writes trajectory.csv and summary.json into out_dir.
int cmd_simulate(const std::string& scenario, const std::string& out_dir);

/// Writes verification.json into out_dir; kGateFailed when any gate fails.
int cmd_verify(const std::string& scenario, const std::string& out_dir);

/// Parameters accepted by sweep.
const std::vector<std::string>& sweep_parameters();

/// One simulation per value, run concurrently; writes sweep.csv into out_dir.
/// x0 values are separated by ';' ("0,-1,pi/3; 3,-1,-pi/4"), scalar values by
/// ',' or ';'.
int cmd_sweep(const std::string& scenario, const std::string& param,
              const std::string& values, const std::string& out_dir);

/// Gate evaluation shared by verify and the tests.
nlohmann::json run_verification(const Scenario& sc, bool& all_pass);

}  // namespace flatpmp::cli
