#pragma once

#include <spdlog/spdlog.h>

namespace bison::log {

// Reads BISON_LOG (trace|debug|info|warn|error|off); default warn. Output
// goes to stderr so CLI data files stay clean.
void init();

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::debug(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args&&... args) {
  spdlog::warn(fmt, std::forward<Args>(args)...);
}

}  // namespace bison::log
