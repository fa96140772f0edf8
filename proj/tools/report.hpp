#pragma once

#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "flatpmp/oracle.hpp"
#include "scenario.hpp"

namespace flatpmp::cli {

/// Shortest decimal that parses back to the same double ("nan", "inf" for
/// non-finite values).
std::string format_double(double v);

void write_trajectory_csv(std::ostream& out, const SimulationLog& log);

nlohmann::json summary_json(const Scenario& sc, const SimulationLog& log);

nlohmann::json residual_json(const ResidualReport& rep);
nlohmann::json perturbation_json(const PerturbationReport& rep);
nlohmann::json flatness_json(const FlatnessReport& rep);

/// NaN and infinities become null.
nlohmann::json number(double v);

}  // namespace flatpmp::cli
