#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace threespheres::cli {

/// Exit statuses of `run`.
inline constexpr int kExitPass = 0;
inline constexpr int kExitVerdictFail = 1;
inline constexpr int kExitInvalidConfig = 2;

/// Environment variable that overrides the output directory.
inline constexpr const char* kOutDirEnv = "THREESPHERES_OUT_DIR";

/// Runs one subcommand. `args` excludes the program name, e.g.
/// {"barrier", "--p", "3", "--samples", "5"}. Tables and reports go to `out`
/// unless an output path is configured; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace threespheres::cli
