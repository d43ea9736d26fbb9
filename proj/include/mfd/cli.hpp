#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfd {

/// Parses "2/64,2/128,0.01" into spacings.
std::vector<double> parse_h_list(const std::string& text);

/// Entry point of the mfd tool: 0 success, 1 solver non-convergence, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace mfd
