#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace afca {

// Runs one CLI invocation (args exclude the program name). Exit codes: 0
// success, 1 validation/usage error, 2 runtime error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace afca
