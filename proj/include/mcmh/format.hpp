#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace mcmh {

/// Fixed-point text for reports; NaN prints as "nan" on every platform.
inline std::string fixed(double value, int digits = 6) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

/// Text that reads back to the identical double.
inline std::string exact(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace mcmh
