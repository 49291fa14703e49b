#pragma once

#include <string>

namespace norm::log {

enum class Level { Quiet, Warn, Info };

void set_level(Level level);
Level level();

void warn(const std::string& msg);
void info(const std::string& msg);

}  // namespace norm::log
