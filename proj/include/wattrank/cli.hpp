#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "wattrank/config.hpp"

namespace wattrank::cli {

/// Runs one `wattrank` invocation; `args` excludes the program name. Returns
/// the process exit code (see ExitCode; `track` returns the child's code).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const config::EnvLookup& env = config::process_env());

}  // namespace wattrank::cli
