#include "hypcse/diag.hpp"

#include <iostream>
#include <mutex>

namespace hypcse::diag {

namespace {

std::mutex g_mutex;
std::function<void(std::string_view)> g_sink;

}  // namespace

void warn(std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

void set_warning_sink(std::function<void(std::string_view)> sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

}  // namespace hypcse::diag
