#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace destab::cli {

// Exit codes of the destab executable.
enum ExitCode : int {
  kExitOk = 0,
  kExitFail = 1,
  kExitPrecondition = 2,
  kExitParse = 3,
  kExitDimension = 4,
  kExitNumeric = 5,
};

// Runs one command line (without the program name). Normal output goes to
// `out`, diagnostics to `err`; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace destab::cli
