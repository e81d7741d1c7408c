#include "mcmh/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mcmh::log {
namespace {

std::atomic<Level> g_level{Level::quiet};
std::mutex g_mutex;

void emit(std::string_view message) {
  const std::lock_guard lock(g_mutex);
  std::clog << "[mcmh] " << message << '\n';
}

}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void info(std::string_view message) {
  if (g_level >= Level::info) emit(message);
}

void debug(std::string_view message) {
  if (g_level >= Level::debug) emit(message);
}

}  // namespace mcmh::log
