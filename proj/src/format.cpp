#include "onofri/format.hpp"

#include <cstdio>

namespace onofri {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace onofri
