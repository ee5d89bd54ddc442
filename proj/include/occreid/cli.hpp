#pragma once

#include <iosfwd>

namespace occreid {

// Exit codes of the command-line entry point.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Parses argv, dispatches to a subcommand and maps errors to exit codes.
// Failures are reported on `err` as a single line:
//   error kind=<kind> message="<text>"
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace occreid
