#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lrp {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_invalid = 2, exit_io = 3 };

/// Runs the `lrp` command line (args exclude the program name). Failures are
/// reported on `err` as a single line "error:<category>: <message>".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lrp
