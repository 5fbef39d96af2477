#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pairsafe::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kBackendError = 3 };

// Runs one command line (args excludes the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pairsafe::cli
