#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace npplab::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kRuntimeError = 2;

// Entry point behind the npplab binary. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace npplab::cli
