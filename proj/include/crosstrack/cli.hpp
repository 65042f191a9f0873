#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace crosstrack::cli {

inline constexpr std::string_view kToolVersion = "crosstrack 0.1.0";

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
/// Input, parse, configuration and evaluation failures.
inline constexpr int kExitInput = 2;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Verbosity from CROSSTRACK_LOG: error, warn (default), info or debug.
enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };
LogLevel log_level_from_env();

}  // namespace crosstrack::cli
