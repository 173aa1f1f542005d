#pragma once

#include <string_view>

namespace amala::log {

enum class Level { error = 0, info = 1, debug = 2 };

/// Reads AMALA_SAEM_LOG (error | info | debug). Defaults to error.
Level level();
void set_level(Level level);

void error(std::string_view msg);
void info(std::string_view msg);
void debug(std::string_view msg);

}  // namespace amala::log
