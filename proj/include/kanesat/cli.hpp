#pragma once

// Scenario runner commands. Each returns a process exit code:
//   0 ok, 1 verify found a failing invariant, 2 config or I/O error,
//   3 numerical failure of the plant (GimbalLock, SingularMass, ...),
//   4 design failure (NotStabilizable, Uncontrollable, Degenerate),
//   5 closed-loop divergence.

#include <iosfwd>
#include <string>

namespace kanesat::cli {

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kConfigError = 2,
  kPlantError = 3,
  kDesignError = 4,
  kDiverged = 5,
};

struct DesignOptions {
  std::string config;
  std::string method = "both";  // lqr | rpa | both
  std::string out;
};

struct SimulateOptions {
  std::string config;
  std::string gain_file;
  std::string method;  // required when the gain file holds both designs
  std::string out_csv;
  std::string report;  // defaults to out_csv + ".json"
};

/// Human-readable progress goes to `out`, diagnostics to `err`.
int cmd_linearize(const std::string& config, const std::string& out_path, std::ostream& out,
                  std::ostream& err);
int cmd_design(const DesignOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const std::string& config, const std::string& out_path, std::ostream& out,
                std::ostream& err);
int cmd_verify(const std::string& config, std::ostream& out, std::ostream& err);

}  // namespace kanesat::cli
