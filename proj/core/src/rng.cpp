// SPDX-License-Identifier: Apache-2.0
#include "reprforge/rng.hpp"

namespace reprforge {

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n <= 0) return 0;
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::int64_t>(x % un);
}

double Rng::gamma(double a) {
  if (a < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^(1/a)
    double u = uniform();
    if (u < 1e-300) u = 1e-300;
    return gamma(a + 1.0) * std::pow(u, 1.0 / a);
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u < 1e-300) u = 1e-300;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

} // namespace reprforge
