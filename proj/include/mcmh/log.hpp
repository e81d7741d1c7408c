#pragma once

#include <string_view>

namespace mcmh::log {

enum class Level { quiet = 0, info = 1, debug = 2 };

void set_level(Level level);
Level level();

/// Writes "[mcmh] message" to stderr when the level allows it.
void info(std::string_view message);
void debug(std::string_view message);

}  // namespace mcmh::log
