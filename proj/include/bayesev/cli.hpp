#pragma once

// Command-line front end. Exit codes: 0 success, 1 runtime or I/O failure,
// 2 usage error.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace bayesev {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output root.
inline constexpr const char* kOutDirEnv = "BAYESEV_OUT_DIR";

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1..10", "2,4,6" or a mix such as "1..3,8"; ids must be positive. Throws std::invalid_argument.
std::vector<int> parse_id_list(const std::string& text);
/// Comma-separated reals. Throws std::invalid_argument.
std::vector<double> parse_real_list(const std::string& text);

/// `<root>/<command>-<UTC timestamp>-<hash>`, with `-2`, `-3`, ... appended on collision.
std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& command,
                                   const std::string& hash);

}  // namespace bayesev
