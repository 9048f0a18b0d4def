#pragma once

#include <functional>
#include <string_view>

namespace hypcse::diag {

/// Reports a recoverable condition. The default sink writes to stderr.
void warn(std::string_view message);

/// Replaces the warning sink; an empty function restores the default.
void set_warning_sink(std::function<void(std::string_view)> sink);

}  // namespace hypcse::diag
