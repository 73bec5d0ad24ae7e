#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace classilist::cli {

/// Process exit codes.
enum ExitCode : int {
    kSuccess = 0,
    kValidationFailure = 1,
    kEnvironmentFailure = 2,
};

/// Runs the `classilist` command line. `args` includes the program name.
/// Data goes to `out`, diagnostics and logs to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace classilist::cli
