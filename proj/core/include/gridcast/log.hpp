#pragma once

namespace gridcast {

// Verbosity comes from the CASCADE_LOG environment variable:
// error < warn (default) < info < debug.
enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level();

void log_error(const char* fmt, ...);
void log_warn(const char* fmt, ...);
void log_info(const char* fmt, ...);
void log_debug(const char* fmt, ...);

}  // namespace gridcast
