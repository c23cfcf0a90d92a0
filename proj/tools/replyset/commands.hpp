#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace replyset::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Entry point of the `replyset` tool. Returns the process exit code; errors
/// are reported on `err` as one JSON line {"error": kind, "message": text}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace replyset::cli
