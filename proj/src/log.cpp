#include "sevln/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace sevln {

namespace {

std::atomic<LogLevel> g_level{LogLevel::warn};
std::mutex g_mutex;

void emit(std::string_view prefix, std::string_view message) {
    std::lock_guard lock(g_mutex);
    std::clog << "sevln: " << prefix << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warn(std::string_view message) {
    if (g_level >= LogLevel::warn) emit("warning: ", message);
}

void log_info(std::string_view message) {
    if (g_level >= LogLevel::info) emit("", message);
}

}  // namespace sevln
