#pragma once

#include <utility>

#include <spdlog/spdlog.h>

namespace semiae::log {

/// Shared stderr logger; its level comes from SEMIAE_LOG
/// (trace, debug, info, warn, error, off; default info).
spdlog::logger& logger();

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().debug(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().warn(fmt, std::forward<Args>(args)...);
}

}  // namespace semiae::log
