#pragma once

#include <cstdio>
#include <string>

namespace artifact {

enum class LogLevel { Info, Warn, Error };

inline void log_line(LogLevel lv, const std::string& msg) {
  const char* tag = lv == LogLevel::Info ? "info"
                    : lv == LogLevel::Warn ? "warn"
                                           : "error";
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

inline void log_info(const std::string& msg) { log_line(LogLevel::Info, msg); }
inline void log_warn(const std::string& msg) { log_line(LogLevel::Warn, msg); }
inline void log_error(const std::string& msg) { log_line(LogLevel::Error, msg); }

}  // namespace artifact
