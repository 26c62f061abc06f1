#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace orient::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one command line (arguments after the program name). Machine output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands a JSON config object into flags for the invoked subcommand path.
/// Keys already present in `args` are skipped so explicit flags win.
std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& config_text,
                                      const std::vector<std::string>& subcommand_path);

}  // namespace orient::cli
