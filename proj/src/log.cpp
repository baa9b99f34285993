#include "matchx/log.hpp"

#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace matchx {
namespace {

std::mutex g_mutex;

LogSink& sink() {
  static LogSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

LogSink set_warning_sink(LogSink s) {
  std::lock_guard lock(g_mutex);
  return std::exchange(sink(), std::move(s));
}

void warn(std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (sink()) sink()(message);
}

}  // namespace matchx
