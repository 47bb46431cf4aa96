#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pgmix::cli {

inline constexpr const char* kVersion = "0.3.1";

enum ExitCode : int { kOk = 0, kIoFailure = 2, kGoldenMiss = 3, kInvalid = 4 };

/// Entry point behind the pgmix binary; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pgmix::cli
