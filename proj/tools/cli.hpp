#pragma once

#include <string>
#include <vector>

namespace maxscore {

// Full command-line dispatch; returns the process exit code
// (0 ok, 1 validation/usage, 2 I/O).
int run_cli(const std::vector<std::string>& args);

} // namespace maxscore
