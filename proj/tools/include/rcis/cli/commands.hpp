#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rcis::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,          ///< bad arguments, config or input files
  exit_not_converged = 2,  ///< a solve hit max_iters; files are still written
  exit_check_failed = 3,   ///< `verify` found a violated invariant
};

struct Console {
  std::ostream& out;
  std::ostream& err;
  bool color = false;
};

/// Runs the command line `args` (without the program name) and returns
/// the process exit code. Never throws.
int run(const std::vector<std::string>& args, const Console& console);

/// True when stdout is a terminal and NO_COLOR is unset or empty.
bool color_enabled();

}  // namespace rcis::cli
