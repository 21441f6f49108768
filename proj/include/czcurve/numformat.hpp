// Number -> text helpers shared by CSV, gnuplot and JSON emitters.
#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace czcurve {

/// Shortest decimal string that round-trips to the same IEEE-754 double.
inline std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace czcurve
