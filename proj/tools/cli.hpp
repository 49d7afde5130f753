#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace balent::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kNumeric = 3 };

/// Runs the command line `args` (program name first). Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& err);

}  // namespace balent::cli
