#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace xcohort::cli {

/// Runs one subcommand. args excludes the program name. Returns the process
/// exit code: 0 success, 2 validation error, 3 data error, 4 internal. Errors
/// are written to err as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xcohort::cli
