// SPDX-License-Identifier: Apache-2.0

#include "cf/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace cf {

LogLevel log_threshold() {
  static LogLevel level = [] {
    const char* env = std::getenv("CF_LOG");
    if (!env) return LogLevel::Warn;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "off") == 0) return LogLevel::Off;
    return LogLevel::Warn;
  }();
  return level;
}

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) < static_cast<int>(log_threshold()) ||
      level == LogLevel::Off)
    return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  std::fprintf(stderr, "[cf %s] %s\n", names[static_cast<int>(level)], message.c_str());
}

}  // namespace cf
