// Internal: fast paths for the handful of exponents the default parameter
// sets hit in pointwise loops.
#pragma once

#include <cmath>

namespace nsk::detail {

inline double pow_fast(double x, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  if (e == 3.0) return x * x * x;
  if (e == 4.0) {
    const double q = x * x;
    return q * q;
  }
  if (e == 0.5) return std::sqrt(x);
  if (e == 1.5) return x * std::sqrt(x);
  if (e == 2.5) return x * x * std::sqrt(x);
  if (e == -0.5) return 1.0 / std::sqrt(x);
  if (e == -1.0) return 1.0 / x;
  if (e == -2.0) return 1.0 / (x * x);
  return std::pow(x, e);
}

}  // namespace nsk::detail
