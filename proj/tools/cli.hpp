#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kbqa::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,        // I/O and other runtime errors
    kInvalid = 2,        // bad flags, config or input files
    kUnknownTopic = 3,
    kBadCheckpoint = 4,  // unreadable, wrong version or wrong KB
};

/// Runs one command; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kbqa::cli
