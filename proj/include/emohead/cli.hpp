#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace emohead {

// Exit codes: 0 success, 1 runtime failure, 2 invalid config or arguments.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// Entry point of the emohead executable; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emohead
