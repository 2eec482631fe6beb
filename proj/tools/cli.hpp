#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace erm::cli {

// Exit codes shared by every command.
enum ExitCode : int {
    ok = 0,
    internal_error = 1,
    config_error = 2,
    data_error = 3,
    numeric_error = 4,
};

/// Run the command line `args` (without the program name). Reports go to
/// `out` unless --out names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace erm::cli
