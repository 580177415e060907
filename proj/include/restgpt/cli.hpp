#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace restgpt {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
/// Conflicts (enhance) or diagnostics (validate) were found.
inline constexpr int kExitFindings = 2;

/// Runs one `restgpt` invocation. Data goes to `out`, logs and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace restgpt
