#pragma once

#include <string_view>

namespace sesdf::log {

void warn(std::string_view message);
void info(std::string_view message);

// Suppresses output; warnings are still counted.
void set_quiet(bool quiet);
bool quiet();
long warning_count();

}  // namespace sesdf::log
