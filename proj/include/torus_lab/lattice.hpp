#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "torus_lab/errors.hpp"

namespace torus {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Point of the plane or of the torus in canonical coordinates (q, p).
struct Point {
  double q = 0.0;
  double p = 0.0;

  friend Point operator+(Point a, Point b) { return {a.q + b.q, a.p + b.p}; }
  friend Point operator-(Point a, Point b) { return {a.q - b.q, a.p - b.p}; }
  friend Point operator*(double s, Point a) { return {s * a.q, s * a.p}; }
  friend bool operator==(const Point&, const Point&) = default;
};

/// Integer lattice point n = (n_q, n_p), used both for Fourier modes and
/// for phase-space translations by n / N.
struct Mode {
  std::int64_t q = 0;
  std::int64_t p = 0;

  friend Mode operator+(Mode a, Mode b) { return {a.q + b.q, a.p + b.p}; }
  friend Mode operator-(Mode a, Mode b) { return {a.q - b.q, a.p - b.p}; }
  friend Mode operator-(Mode a) { return {-a.q, -a.p}; }
  friend bool operator==(const Mode&, const Mode&) = default;
  friend auto operator<=>(const Mode&, const Mode&) = default;
};

inline std::int64_t sup_norm(Mode n) { return std::max(std::abs(n.q), std::abs(n.p)); }

/// Symplectic form omega(x, y) = x_q y_p - x_p y_q.
inline double omega(Point x, Point y) { return x.q * y.p - x.p * y.q; }
inline std::int64_t omega(Mode n, Mode m) { return n.q * m.p - n.p * m.q; }
inline double omega(Point x, Mode n) {
  return x.q * static_cast<double>(n.p) - x.p * static_cast<double>(n.q);
}

/// Reduction of a real number to [0, 1).
inline double wrap_unit(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

inline Point wrap(Point x) { return {wrap_unit(x.q), wrap_unit(x.p)}; }

/// Representative of v mod 1 in [-1/2, 1/2).
inline double centered_unit(double v) { return v - std::floor(v + 0.5); }

/// Flat-torus distance between two points of [0,1)^2.
inline double torus_distance(Point a, Point b) {
  return std::hypot(centered_unit(a.q - b.q), centered_unit(a.p - b.p));
}

/// 2x2 integer matrix acting on column vectors (q, p).
struct IntMatrix2 {
  std::int64_t a = 1, b = 0, c = 0, d = 1;

  std::int64_t det() const { return a * d - b * c; }
  std::int64_t trace() const { return a + d; }

  Mode operator*(Mode n) const { return {a * n.q + b * n.p, c * n.q + d * n.p}; }
  Point operator*(Point x) const {
    return {static_cast<double>(a) * x.q + static_cast<double>(b) * x.p,
            static_cast<double>(c) * x.q + static_cast<double>(d) * x.p};
  }
  IntMatrix2 operator*(const IntMatrix2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  friend bool operator==(const IntMatrix2&, const IntMatrix2&) = default;

  /// Inverse of a unimodular matrix.
  IntMatrix2 inverse() const {
    if (det() != 1) throw InvalidMatrixError("inverse requires det A = 1");
    return {d, -b, -c, a};
  }

  IntMatrix2 power(int t) const {
    IntMatrix2 base = t >= 0 ? *this : inverse();
    IntMatrix2 out{};
    for (int k = 0; k < std::abs(t); ++k) out = out * base;
    return out;
  }

  static IntMatrix2 identity() { return {}; }
};

/// Default hyperbolic automorphism; both a*b and c*d are even, so kappa = 0
/// is admissible for every N.
inline IntMatrix2 default_cat_matrix() { return {2, 1, 3, 2}; }

inline void require_hyperbolic(const IntMatrix2& A) {
  if (A.det() != 1) throw InvalidMatrixError("matrix must have det = 1");
  if (std::abs(A.trace()) <= 2) throw InvalidMatrixError("matrix must satisfy |tr A| > 2");
}

/// Points x of [0,1)^2 with A^period x = x mod 1. These are the solutions of
/// (A^period - I) x in Z^2, enumerated by inverting the integer matrix.
inline std::vector<Point> periodic_points(const IntMatrix2& A, int period) {
  if (period < 1) throw ValidationError("period must be >= 1");
  IntMatrix2 B = A.power(period);
  const double m11 = static_cast<double>(B.a - 1), m12 = static_cast<double>(B.b);
  const double m21 = static_cast<double>(B.c), m22 = static_cast<double>(B.d - 1);
  const double det = m11 * m22 - m12 * m21;
  if (det == 0.0) throw InvalidMatrixError("A^period - I is singular");
  const auto bound = static_cast<std::int64_t>(std::llround(std::abs(m11) + std::abs(m12) +
                                                            std::abs(m21) + std::abs(m22)));
  const auto count = static_cast<std::size_t>(std::llround(std::abs(det)));
  std::vector<Point> out;
  auto seen = [&](Point x) {
    return std::any_of(out.begin(), out.end(),
                       [&](Point y) { return torus_distance(x, y) < 1e-9; });
  };
  for (std::int64_t k1 = -bound; k1 <= bound && out.size() < count; ++k1) {
    for (std::int64_t k2 = -bound; k2 <= bound && out.size() < count; ++k2) {
      Point x{(m22 * static_cast<double>(k1) - m12 * static_cast<double>(k2)) / det,
              (-m21 * static_cast<double>(k1) + m11 * static_cast<double>(k2)) / det};
      x = wrap(x);
      if (std::abs(centered_unit(x.q)) < 1e-12) x.q = 0.0;
      if (std::abs(centered_unit(x.p)) < 1e-12) x.p = 0.0;
      if (!seen(x)) out.push_back(x);
    }
  }
  std::sort(out.begin(), out.end(),
            [](Point x, Point y) { return x.q != y.q ? x.q < y.q : x.p < y.p; });
  return out;
}

}  // namespace torus
