#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace irm::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kTransport = 3,
  kAssertion = 4,
};

// Runs one `irm` invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irm::cli
