#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace evfuse {

// Reports print every real with 6 significant digits.
inline std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

/// `value` rounded to what format_real prints.
inline double round_real(double value) { return std::strtod(format_real(value).c_str(), nullptr); }

}  // namespace evfuse
