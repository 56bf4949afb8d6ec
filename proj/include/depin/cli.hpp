#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "depin/io.hpp"

namespace depin {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitBudget = 4,
};

// Subcommands on a validated configuration. Each writes its files under
// config.out, including resolved_config.cfg, and returns an exit code.
int cmd_gen(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_bounds(const RunConfig& config, std::ostream& log);
int cmd_sweep(const RunConfig& config, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& log);

/// Parses arguments (argv[0] is the program name), runs the subcommand and
/// maps exceptions to exit codes. Messages go to `out` and `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace depin
