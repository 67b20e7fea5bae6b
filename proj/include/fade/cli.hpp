#pragma once

#include <string>
#include <vector>

namespace fade {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

/// Runs the `fade` command line; args exclude the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace fade
