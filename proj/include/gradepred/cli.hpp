#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gradepred::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point for the `gradepred` executable.
int run(int argc, char** argv);

/// Same as above without the program name; output goes to the given streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gradepred::cli
