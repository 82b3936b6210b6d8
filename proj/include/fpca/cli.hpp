#pragma once

#include <iosfwd>

namespace fpca {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNoConvergence = 3,
};

/// Entry point of the `fpca` tool: simulate, fit, select and bench.
int run_cli(int argc, const char* const* argv);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fpca
