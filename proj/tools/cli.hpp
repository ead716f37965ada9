#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecoval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `ecoval` executable: subcommands value, curve, cost,
// audit and synth. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecoval::cli
