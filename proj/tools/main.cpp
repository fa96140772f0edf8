#include <cstdlib>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "scenario.hpp"

namespace {

// FLATPMP_LOG_LEVEL: trace, debug, info, warn (default), error, critical, off.
void configure_logging() {
  auto logger = spdlog::stderr_color_mt("flatpmp");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FLATPMP_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("FLATPMP_LOG_LEVEL='{}' not recognized, keeping warn", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace flatpmp::cli;
  configure_logging();

  CLI::App app{"Analytic optimal tracking for driftless flat systems with 3 states and 2 inputs"};
  app.require_subcommand(1);
  app.footer(scenario_schema() +
             "\nExit codes: 0 success, 1 config error, 2 runtime error, 3 verification gate failed."
             "\nLog level: FLATPMP_LOG_LEVEL=trace|debug|info|warn|error|off (default warn).");

  std::string scenario, out_dir, param, values;

  auto* sim = app.add_subcommand("simulate", "Run one closed-loop simulation");
  sim->add_option("scenario", scenario, "Scenario file or built-in name")->required();
  sim->add_option("-o,--output", out_dir, "Output directory (trajectory.csv, summary.json)");

  auto* ver = app.add_subcommand("verify", "Run the verification gates");
  ver->add_option("scenario", scenario, "Scenario file or built-in name")->required();
  ver->add_option("-o,--output", out_dir, "Output directory (verification.json)");

  auto* sw = app.add_subcommand("sweep", "Run one simulation per parameter value");
  sw->add_option("scenario", scenario, "Scenario file or built-in name")->required();
  sw->add_option("--param", param, "x0 | u_max | dt | Qbar-scale")->required();
  sw->add_option("--values", values,
                 "Values; x0 entries separated by ';' (\"0,-1,pi/3;3,-1,-pi/4\")")
      ->required();
  sw->add_option("-o,--output", out_dir, "Output directory (sweep.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (*sim) return cmd_simulate(scenario, out_dir);
  if (*ver) return cmd_verify(scenario, out_dir);
  return cmd_sweep(scenario, param, values, out_dir);
}
