#pragma once

#include <functional>
#include <string_view>

namespace coexist {

using WarningHandler = std::function<void(std::string_view)>;

/// Replace the process-wide warning sink. Passing an empty handler restores
/// the default, which prints to stderr. Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

/// Installs a handler for the lifetime of the guard.
class ScopedWarningHandler {
public:
  explicit ScopedWarningHandler(WarningHandler handler)
      : previous_(set_warning_handler(std::move(handler))) {}
  ~ScopedWarningHandler() { set_warning_handler(std::move(previous_)); }
  ScopedWarningHandler(const ScopedWarningHandler&) = delete;
  ScopedWarningHandler& operator=(const ScopedWarningHandler&) = delete;

private:
  WarningHandler previous_;
};

}  // namespace coexist
