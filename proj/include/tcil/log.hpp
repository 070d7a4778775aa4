#pragma once

#include <string_view>

namespace tcil {

// Warnings go to stderr unless silenced (tests silence them).
void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);
int warning_count();

}  // namespace tcil
