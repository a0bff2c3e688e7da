#pragma once

// Shared text-serialization helpers. Doubles print with %.17g, which
// round-trips every finite IEEE double exactly.

#include <cstdio>
#include <string>

namespace afn::io {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace afn::io
