#ifndef HOB_TOOLS_CLI_HPP
#define HOB_TOOLS_CLI_HPP

#include <iosfwd>

namespace hob::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kInfeasible = 3, kNumeric = 4 };

// Entry point shared by the binary and the tests. Subcommands: datagen, fit,
// simulate, compare, sweep.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hob::cli

#endif  // HOB_TOOLS_CLI_HPP
