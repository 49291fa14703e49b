#include "norm/log.hpp"

#include <atomic>
#include <iostream>

namespace norm::log {
namespace {
std::atomic<Level> g_level{Level::Warn};
}

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void warn(const std::string& msg) {
  if (g_level.load() >= Level::Warn) std::cerr << "warning: " << msg << '\n';
}

void info(const std::string& msg) {
  if (g_level.load() >= Level::Info) std::cerr << msg << '\n';
}

}  // namespace norm::log
