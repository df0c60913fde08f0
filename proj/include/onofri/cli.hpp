#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace onofri::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsage = 2 };

/// Runs `onofri-lab <command> [options]`. `args` excludes the program name.
/// Results go to `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace onofri::cli
