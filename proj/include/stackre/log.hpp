#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace stackre {

inline std::atomic<bool>& warnings_enabled() {
  static std::atomic<bool> enabled{true};
  return enabled;
}

inline void log_warning(std::string_view msg) {
  if (warnings_enabled().load(std::memory_order_relaxed)) {
    std::cerr << "stackre: warning: " << msg << '\n';
  }
}

}  // namespace stackre
