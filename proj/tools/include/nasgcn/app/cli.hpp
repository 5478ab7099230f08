#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace nasgcn::app {

/// Runs one subcommand. `args` excludes the program name. Returns the process
/// exit code: 0 on success, 1 on a runtime or config error, 2 on bad usage.
int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Reads a 1-based numeric column ("file.csv:2"), one entry per data row. A
/// first row that is not numeric is taken as a header. Later cells that are
/// missing or not numbers come back as NaN, so rows stay aligned.
std::vector<double> read_csv_column(const std::string& spec);

}  // namespace nasgcn::app
