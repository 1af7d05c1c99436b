#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wdro::cli {

// Runs `wdro <command> [flags]` with args excluding the program name.
// Returns 0 on success, 1 on a computational failure (a Report carrying the
// error is still written) and 2 on a usage error (message on err).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wdro::cli
