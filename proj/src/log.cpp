#include "winnow/log.hpp"

#include <iostream>
#include <mutex>

namespace winnow::logging {

namespace {

std::mutex g_mutex;
Sink g_sink;

void emit(const char* level, const std::string& message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (g_sink) {
    g_sink(std::string(level) + message);
  } else {
    std::cerr << level << message << '\n';
  }
}

}  // namespace

void set_sink(Sink sink) {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_sink = std::move(sink);
}

void warn(const std::string& message) { emit("[warn] ", message); }
void info(const std::string& message) { emit("[info] ", message); }

}  // namespace winnow::logging
