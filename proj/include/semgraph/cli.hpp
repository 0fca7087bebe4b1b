#pragma once

#include <ostream>

namespace semgraph {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kRuntimeError = 1, kConfigError = 2, kNotFound = 3 };

/// Entry point of the `semgraph` tool; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semgraph
