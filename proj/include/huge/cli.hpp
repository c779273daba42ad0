#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace huge::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

/// Runs one subcommand from argv (without the program name). Returns the
/// process exit code: 0 on success, 2 on usage or validation errors, 3 on a
/// numerical failure during training.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

}  // namespace huge::cli
