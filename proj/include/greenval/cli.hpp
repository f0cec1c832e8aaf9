#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace greenval {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line (without the program name). Reports go to `out`
/// unless --output is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace greenval
