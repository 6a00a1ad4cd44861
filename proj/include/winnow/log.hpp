#pragma once

#include <functional>
#include <string>

namespace winnow::logging {

using Sink = std::function<void(const std::string&)>;

// Replaces the warning sink. An empty function restores the default (stderr).
void set_sink(Sink sink);

void warn(const std::string& message);
void info(const std::string& message);

}  // namespace winnow::logging
