#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace specpredict::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`, diagnostics to `err`. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specpredict::cli
