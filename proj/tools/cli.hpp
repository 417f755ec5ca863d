#ifndef MMDCP_CLI_HPP
#define MMDCP_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace mmdcp::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kInvalidInput = 3,
    kCheckFailed = 4,
};

/// Runs one command line (`args[0]` is the program name) and returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mmdcp::cli

#endif  // MMDCP_CLI_HPP
