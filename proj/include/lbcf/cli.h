#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lbcf {

// Exit codes of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRefused = 2;

// Entry point of the `lbcf` tool. `args` excludes the program name. Progress
// goes to `err`; artifacts go to files only.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lbcf
