#pragma once

#include <functional>
#include <string_view>

namespace matchx {

using LogSink = std::function<void(std::string_view)>;

/// Replaces the warning sink (default: stderr). Returns the previous sink.
LogSink set_warning_sink(LogSink sink);

void warn(std::string_view message);

}  // namespace matchx
