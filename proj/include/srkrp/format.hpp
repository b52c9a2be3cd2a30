#pragma once

#include <charconv>
#include <string>

namespace srkrp::detail {

// Shortest decimal form that round-trips to the same double, identical on
// every run and platform. Used everywhere a number lands in CSV or logs.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace srkrp::detail
