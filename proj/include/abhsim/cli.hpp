#pragma once

#include <iosfwd>

namespace abhsim {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitNumerical = 2,
    kExitVerification = 3,
};

/// Parses argv and runs one subcommand. Never throws.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace abhsim
