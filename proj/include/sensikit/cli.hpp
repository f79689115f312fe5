#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sensikit {

// Runs one tool invocation; `args` is everything after the program name.
// Returns the process exit code: 0 on success, 1 on input problems
// (unknown flags, malformed files, bad vectors), 2 when the requested
// analysis could not certify the regularity it needs. In the exit-2 case a
// diagnostic report naming the failed condition still goes to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace sensikit
