#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace biphoton::cli {

enum ExitCode : int { success = 0, usage_error = 2, numerical_failure = 3 };

// Runs the command line `args` (without the program name), writing tables to
// `out` unless --output is given and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace biphoton::cli
