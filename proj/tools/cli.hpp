#pragma once

#include <iosfwd>

namespace trtm::cli {

/// Stable process exit codes.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kMissingInput = 2,
    kParseError = 3,
    kLabelError = 4,
    kAlignmentError = 5,
};

/// Entry point shared by the `trtm` binary and the in-process tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace trtm::cli
