#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vprobe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitTransport = 3;

/// Entry point of the `vprobe` command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vprobe
