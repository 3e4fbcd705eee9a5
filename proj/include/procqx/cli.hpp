#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace procqx {

/// Runs one CLI invocation. `args` excludes the program name. Returns the
/// process exit code: 0 success, 2 usage error, 3 input/validation error,
/// 4 runtime failure.
int run_command(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace procqx
