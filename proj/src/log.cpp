#include "tcil/log.hpp"

#include <atomic>
#include <iostream>

namespace tcil {

namespace {
std::atomic<bool> g_enabled{true};
std::atomic<int> g_count{0};
}  // namespace

void log_warning(std::string_view message) {
  ++g_count;
  if (g_enabled) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_enabled = enabled; }

int warning_count() { return g_count; }

}  // namespace tcil
