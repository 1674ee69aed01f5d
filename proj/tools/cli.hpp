#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace citelens::cli {

/// Exit codes: 0 success, 1 hard failure, 2 usage error, missing file or
/// unknown id.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace citelens::cli
