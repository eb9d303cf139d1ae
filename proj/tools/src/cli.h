#pragma once

#include <string>
#include <vector>

namespace wvsc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// argv[0] is the program name. Diagnostics go to stderr as one line.
int run_command(const std::vector<std::string>& argv);

}  // namespace wvsc::cli
