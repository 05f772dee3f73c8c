#pragma once

#include <cmath>
#include <numbers>

namespace temper {

/// Scaled complementary error function exp(x^2) erfc(x).
///
/// Below 5 the direct product is accurate to a few ulps; above, erfc
/// underflows long before the product does, so a continued fraction is
/// evaluated backwards instead.
inline double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
  if (x < 5.0) return std::exp(x * x) * std::erfc(x);
  if (std::isinf(x)) return 0.0;
  // erfc(x) e^{x^2} sqrt(pi) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
  double t = x;
  for (int n = 60; n >= 1; --n) t = x + 0.5 * n / t;
  return 1.0 / (std::sqrt(std::numbers::pi) * t);
}

}  // namespace temper
