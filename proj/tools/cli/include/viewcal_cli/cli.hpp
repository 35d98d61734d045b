#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace viewcal::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kIoError = 3,
  kNumericError = 4,
};

/// Runs one command line (args[0] is the program name). Results go to files, the progress log to
/// `out` and diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace viewcal::cli
