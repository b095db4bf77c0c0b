#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace darnet::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kDataError = 3,
    kFormatError = 4,
};

// Runs one darnet command. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace darnet::cli
