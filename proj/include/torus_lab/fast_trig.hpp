#pragma once

#include <cmath>

namespace torus::detail {

/// sin(2 pi x) and cos(2 pi x) with x reduced mod 1 first. Branch-free so that
/// loops over arrays vectorize; absolute error ~2e-16.
inline void sincos_2pi(double x, double& s, double& c) {
  x -= std::floor(x + 0.5);                  // [-1/2, 1/2)
  const double k = std::floor(4.0 * x + 0.5);  // quadrant in {-2, ..., 2}
  const double y = 6.283185307179586 * (x - 0.25 * k);  // [-pi/4, pi/4]
  const double y2 = y * y;
  double sp = -1.0 / 121645100408832000.0;  // -1/19!
  sp = sp * y2 + 1.0 / 355687428096000.0;
  sp = sp * y2 - 1.0 / 1307674368000.0;
  sp = sp * y2 + 1.0 / 6227020800.0;
  sp = sp * y2 - 1.0 / 39916800.0;
  sp = sp * y2 + 1.0 / 362880.0;
  sp = sp * y2 - 1.0 / 5040.0;
  sp = sp * y2 + 1.0 / 120.0;
  sp = sp * y2 - 1.0 / 6.0;
  const double sy = y + y * y2 * sp;
  double cp = 1.0 / 6402373705728000.0;  // 1/18!
  cp = cp * y2 - 1.0 / 20922789888000.0;
  cp = cp * y2 + 1.0 / 87178291200.0;
  cp = cp * y2 - 1.0 / 479001600.0;
  cp = cp * y2 + 1.0 / 3628800.0;
  cp = cp * y2 - 1.0 / 40320.0;
  cp = cp * y2 + 1.0 / 720.0;
  cp = cp * y2 - 1.0 / 24.0;
  cp = cp * y2 + 0.5;
  const double cy = 1.0 - y2 * cp;
  // rotate by k pi/2 with q = k mod 4, using only floor so loops vectorize
  const double q = k - 4.0 * std::floor(0.25 * k);
  const double half = std::floor(0.5 * q);
  const double odd = q - 2.0 * half;
  const double neg_s = 1.0 - 2.0 * half;
  const double m = std::floor(0.5 * (q + 1.0));
  const double neg_c = 1.0 - 2.0 * (m - 2.0 * std::floor(0.5 * m));
  s = neg_s * (odd * cy + (1.0 - odd) * sy);
  c = neg_c * (odd * sy + (1.0 - odd) * cy);
}

/// Array form of sincos_2pi.
inline void sincos_2pi(const double* __restrict x, double* __restrict s, double* __restrict c, int n) {
  for (int i = 0; i < n; ++i) sincos_2pi(x[i], s[i], c[i]);
}

}  // namespace torus::detail
