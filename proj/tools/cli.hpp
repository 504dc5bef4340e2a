#pragma once

#include <iosfwd>

namespace kernelsens::cli {

// Exit codes: 0 success, 1 runtime error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand. Data goes to `out` only when the
/// command succeeds; diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kernelsens::cli
