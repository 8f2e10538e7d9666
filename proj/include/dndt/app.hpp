#pragma once

#include <ostream>

namespace dndt {

// Process exit codes.
inline constexpr int k_exit_ok = 0;
inline constexpr int k_exit_usage = 2;
inline constexpr int k_exit_data = 3;
inline constexpr int k_exit_numeric = 4;

// Entry point of the `dndt` command. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dndt
