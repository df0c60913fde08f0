#pragma once

#include <string>

namespace onofri {

/// 17 significant digits, enough to round-trip any double.
std::string format_real(double x);

}  // namespace onofri
