#include "amala/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace amala::log {
namespace {

Level from_env() {
  const char* raw = std::getenv("AMALA_SAEM_LOG");
  if (raw == nullptr) return Level::error;
  const std::string v(raw);
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  return Level::error;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(from_env())};
  return lvl;
}

void emit(Level lvl, std::string_view tag, std::string_view msg) {
  if (static_cast<int>(lvl) > current().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[amala-saem " << tag << "] " << msg << '\n';
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void error(std::string_view msg) { emit(Level::error, "error", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }

}  // namespace amala::log
