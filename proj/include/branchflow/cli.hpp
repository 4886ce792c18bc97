#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace branchflow {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInput = 2,
  kExitSimulation = 3,
  kExitVerification = 4,
};

/// Entry point of the `branchflow` tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace branchflow
