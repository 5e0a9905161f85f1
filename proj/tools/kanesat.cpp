// Command-line scenario runner. Log verbosity via SPDLOG_LEVEL (e.g. debug).

#include <iostream>
#include <string>

#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "kanesat/cli.hpp"
#include "kanesat/report.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("kanesat"));
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();

  CLI::App app{"Three-body spacecraft attitude modelling and controller design"};
  app.set_version_flag("--version", std::string(kanesat::kToolVersion));
  app.require_subcommand(1);

  std::string config, out;

  auto* lin = app.add_subcommand("linearize", "Linearize the plant about the configured equilibrium");
  lin->add_option("config", config, "Scenario JSON")->required();
  lin->add_option("-o,--out", out, "Output report (JSON)")->required();

  kanesat::cli::DesignOptions design;
  auto* des = app.add_subcommand("design", "Design LQR and/or robust pole-assignment gains");
  des->add_option("config", design.config, "Scenario JSON")->required();
  des->add_option("-m,--method", design.method, "lqr | rpa | both")
      ->check(CLI::IsMember({"lqr", "rpa", "both"}));
  des->add_option("-o,--out", design.out, "Output design report (JSON)")->required();

  kanesat::cli::SimulateOptions simulate;
  auto* sim = app.add_subcommand("simulate", "Simulate the nonlinear closed loop with a designed gain");
  sim->add_option("config", simulate.config, "Scenario JSON")->required();
  sim->add_option("-g,--gain-file", simulate.gain_file, "Design report from `design`")->required();
  sim->add_option("-m,--method", simulate.method, "Design to use when the file holds several")
      ->check(CLI::IsMember({"lqr", "rpa"}));
  sim->add_option("-o,--out", simulate.out_csv, "Trajectory CSV")->required();
  sim->add_option("-r,--report", simulate.report, "Performance report (default: <csv>.json)");

  auto* cmp = app.add_subcommand("compare", "Run the full pipeline for both designs and report");
  cmp->add_option("config", config, "Scenario JSON")->required();
  cmp->add_option("-o,--out", out, "Output comparison report (JSON)")->required();

  auto* ver = app.add_subcommand("verify", "Check model invariants for a scenario");
  ver->add_option("config", config, "Scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kanesat::cli::kConfigError;
  }

  using namespace kanesat::cli;
  if (*lin) return cmd_linearize(config, out, std::cout, std::cerr);
  if (*des) return cmd_design(design, std::cout, std::cerr);
  if (*sim) return cmd_simulate(simulate, std::cout, std::cerr);
  if (*cmp) return cmd_compare(config, out, std::cout, std::cerr);
  return cmd_verify(config, std::cout, std::cerr);
}
