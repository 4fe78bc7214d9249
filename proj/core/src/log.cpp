#include "gridcast/log.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace gridcast {

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("CASCADE_LOG");
        if (!env) return LogLevel::warn;
        if (std::strcmp(env, "error") == 0) return LogLevel::error;
        if (std::strcmp(env, "info") == 0) return LogLevel::info;
        if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

namespace {
void vlog(LogLevel lvl, const char* tag, const char* fmt, va_list args) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
    std::fprintf(stderr, "[%s] ", tag);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}
}  // namespace

#define GRIDCAST_LOG_IMPL(fn, lvl, tag)            \
    void fn(const char* fmt, ...) {                \
        va_list args;                              \
        va_start(args, fmt);                       \
        vlog(lvl, tag, fmt, args);                 \
        va_end(args);                              \
    }

GRIDCAST_LOG_IMPL(log_error, LogLevel::error, "error")
GRIDCAST_LOG_IMPL(log_warn, LogLevel::warn, "warn")
GRIDCAST_LOG_IMPL(log_info, LogLevel::info, "info")
GRIDCAST_LOG_IMPL(log_debug, LogLevel::debug, "debug")

#undef GRIDCAST_LOG_IMPL

}  // namespace gridcast
