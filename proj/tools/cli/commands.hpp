#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edgeav::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsageError = 2,
  kIoError = 3,
};

/// Parses `args` (without the program name) and runs the selected command.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgeav::cli
