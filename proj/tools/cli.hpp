#pragma once

#include <ostream>

namespace cellmap::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitConfig = 3,
    kExitData = 4,
    kExitInfeasible = 5,
};

/// Parses argv, runs one subcommand and maps failures to exit codes. Errors
/// are reported on `err` as a single line `error: <kind>: <message>`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace cellmap::cli
