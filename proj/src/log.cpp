#include "bison/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <mutex>

namespace bison::log {

void init() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_logger_mt("bison");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("BISON_LOG"))
      level = spdlog::level::from_str(env);
    spdlog::set_level(level);
  });
}

}  // namespace bison::log
