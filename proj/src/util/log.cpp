#include "sesdf/util/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace sesdf::log {
namespace {
std::atomic<bool> g_quiet{false};
std::atomic<long> g_warnings{0};
std::mutex g_mutex;
}  // namespace

void warn(std::string_view message) {
  ++g_warnings;
  if (g_quiet) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "warning: " << message << '\n';
}

void info(std::string_view message) {
  if (g_quiet) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << message << '\n';
}

void set_quiet(bool quiet) { g_quiet = quiet; }
bool quiet() { return g_quiet; }
long warning_count() { return g_warnings; }

}  // namespace sesdf::log
