#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ltaf {

// Runs the command-line interface on `args` (program name excluded).
// Returns 0 on success, 1 on a runtime failure and 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ltaf
