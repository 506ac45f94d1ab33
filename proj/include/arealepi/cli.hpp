#pragma once

#include <iosfwd>

namespace arealepi {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitNotConverged = 2, kExitExplosion = 3 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace arealepi
