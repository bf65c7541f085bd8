#pragma once
// Command-line front end. `run` takes the arguments after the program name
// and returns the process exit code: 0 when every check came out as
// expected, 1 on a check failure, 2 on a configuration or guard error.

#include <iosfwd>
#include <string>
#include <vector>

namespace fdlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdlab::cli
