#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ldsplan::cli {

// Exit codes. Stable; documented in README.
inline constexpr int kOk = 0;
inline constexpr int kRuntime = 1;     // anything uncategorized
inline constexpr int kUsage = 2;       // bad flags, unknown subcommand
inline constexpr int kIo = 3;          // unreadable / unwritable file
inline constexpr int kData = 4;        // malformed file or invalid value
inline constexpr int kInfeasible = 5;  // instance too large for an exact method
inline constexpr int kDivergence = 6;  // training produced non-finite values

/// Runs one command line (args excludes the program name). Data goes to
/// `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ldsplan::cli
