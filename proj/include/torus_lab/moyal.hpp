#pragma once

#include <cmath>
#include <string>

#include "torus_lab/observable.hpp"

namespace torus {

/// j-th term of the Moyal product expansion f # g = sum_j hbar^j f #_j g:
///
///   f #_j g = sum_{a+b=j} G(a,b) d_q^a d_p^b f * d_q^b d_p^a g,
///   1 / G(a,b) = (-1)^a a! b! (2i)^j.
///
/// Evaluated exactly on Fourier coefficients. Orders above 2 are not
/// supported.
inline Observable moyal_term(const Observable& f, const Observable& g, int j) {
  if (j < 0 || j > 2) throw UnsupportedOrder("moyal_term supports j in {0,1,2}, got " + std::to_string(j));
  Observable out(f.max_mode() + g.max_mode());
  for (int a = 0; a <= j; ++a) {
    const int b = j - a;
    const cplx denom = (a % 2 == 0 ? 1.0 : -1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) *
                       std::pow(cplx{0.0, 2.0}, j);
    out += (1.0 / denom) * (f.derivative(a, b) * g.derivative(b, a));
  }
  return out;
}

/// Poisson bracket {g, f} = d_p g d_q f - d_q g d_p f.
inline Observable poisson_bracket(const Observable& g, const Observable& f) {
  return g.derivative(0, 1) * f.derivative(1, 0) - g.derivative(1, 0) * f.derivative(0, 1);
}

}  // namespace torus
