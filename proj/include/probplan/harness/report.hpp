#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

namespace probplan {

// 95% Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(int successes, int n,
                                                 double z = 1.959963984540054) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Fixed-width float formatting so result files are byte-stable.
inline std::string format_fixed(double value, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

}  // namespace probplan
