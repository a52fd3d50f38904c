#pragma once

#include <string_view>

namespace npplab::log {

enum class Level { quiet = 0, warn = 1, info = 2, debug = 3 };

void set_level(Level level);
Level level();

// Thread-safe, one line per call, to stderr.
void warn(std::string_view msg);
void info(std::string_view msg);
void debug(std::string_view msg);

}  // namespace npplab::log
