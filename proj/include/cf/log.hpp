// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace cf {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

/// Threshold comes from the CF_LOG environment variable
/// (debug|info|warn|error|off); default warn.
LogLevel log_threshold();

void log(LogLevel level, const std::string& message);

inline void log_debug(const std::string& m) { log(LogLevel::Debug, m); }
inline void log_info(const std::string& m) { log(LogLevel::Info, m); }
inline void log_warn(const std::string& m) { log(LogLevel::Warn, m); }
inline void log_error(const std::string& m) { log(LogLevel::Error, m); }

}  // namespace cf
