#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "torus_lab/errors.hpp"
#include "torus_lab/lattice.hpp"
#include "torus_lab/observable.hpp"
#include "torus_lab/quantization.hpp"

namespace torus {

/// Gaussian coherent state parameters: anchor a and squeezing exponent mu,
/// profile eta(q) = pi^{-1/4} e^{-q^2/2}.
struct CoherentStateSpec {
  Point a;
  double mu = 0.5;

  void validate() const {
    if (!(mu > 0.0 && mu < 1.0)) throw ValidationError("mu must lie in (0, 1), got " + std::to_string(mu));
  }
};

struct TorusState {
  Vector vector;
  TorusHilbertSpace space;
  double norm_cached = 1.0;

  double norm() const { return vector.norm(); }
};

inline void require_same_space(const TorusHilbertSpace& a, const TorusHilbertSpace& b) {
  if (!(a == b)) throw SpaceMismatch("states live in different Hilbert spaces");
}

/// Plane coherent state
///   phi^a(q) = hbar^{-mu/2} pi^{-1/4} exp(-(q - a_q)^2 / (2 hbar^{2 mu}))
///              exp((i/hbar)(a_p q - a_q a_p / 2)).
inline cplx plane_coherent(const CoherentStateSpec& s, double hbar, double q) {
  const double w = std::pow(hbar, s.mu);
  const double d = q - s.a.q;
  return std::polar(std::pow(std::numbers::pi, -0.25) / std::sqrt(w) * std::exp(-d * d / (2 * w * w)),
                    (s.a.p * q - 0.5 * s.a.q * s.a.p) / hbar);
}

/// Nonzero components of a periodized coherent state, (r, value) pairs.
using SparseState = std::vector<std::pair<int, cplx>>;

/// Components of the periodized state in the psi_r basis,
///   c_r = N^{-1/2} sum_n e^{i kappa_p n} phi^a(q_r - n),   q_r = node(r),
/// without normalization. Translates beyond the point where the Gaussian
/// drops below 1e-18 of its peak are skipped.
inline SparseState coherent_components(const TorusHilbertSpace& space, const CoherentStateSpec& s) {
  const int N = space.N();
  const double hbar = space.hbar();
  const double reach = std::pow(hbar, s.mu) * std::sqrt(2.0 * std::log(1e18));
  const double kp = space.kappa().p;
  const auto n_lo = static_cast<long>(std::floor(-s.a.q - reach));
  const auto n_hi = static_cast<long>(std::ceil(1.0 - s.a.q + reach));
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  SparseState out;
  for (int r = 0; r < N; ++r) {
    const double q = space.node(r);
    cplx c{};
    bool hit = false;
    for (long n = n_lo; n <= n_hi; ++n) {
      const double x = q - static_cast<double>(n);
      if (std::abs(x - s.a.q) > reach) continue;
      c += std::polar(1.0, kp * static_cast<double>(n)) * plane_coherent(s, hbar, x);
      hit = true;
    }
    if (hit) out.emplace_back(r, c * scale);
  }
  return out;
}

inline Vector to_dense(const SparseState& s, int N) {
  Vector v = Vector::Zero(N);
  for (const auto& [r, c] : s) v(r) = c;
  return v;
}

/// <s, v> for a sparse s.
inline cplx sparse_dot(const SparseState& s, const Vector& v) {
  cplx acc{};
  for (const auto& [r, c] : s) acc += std::conj(c) * v(r);
  return acc;
}

/// Periodized coherent state, normalized, with the pre-normalization norm
/// cached.
inline TorusState coherent_state(const TorusHilbertSpace& space, const CoherentStateSpec& s) {
  s.validate();
  Vector v = to_dense(coherent_components(space, s), space.N());
  const double n = v.norm();
  if (n < 1e-12) throw DegenerateState("coherent state has vanishing norm");
  return {v / n, space, n};
}

inline TorusState basis_state(const TorusHilbertSpace& space, int r) {
  Vector v = Vector::Zero(space.N());
  v(r) = 1.0;
  return {v, space, 1.0};
}

/// Op^W(f) v through the sparse translation actions.
inline Vector apply_quantized(const TorusHilbertSpace& space, const Observable& f, const Vector& v) {
  require_quantizable(space, f);
  Vector out = Vector::Zero(v.size());
  f.for_each_nonzero([&](Mode n, cplx c) { out += c * translation_action(space, n).apply(v); });
  return out;
}

/// <s1, Op^W(f) s2>.
inline cplx overlap(const TorusHilbertSpace& space, const Observable& f, const TorusState& s1,
                    const TorusState& s2) {
  require_same_space(space, s1.space);
  require_same_space(space, s2.space);
  return s1.vector.dot(apply_quantized(space, f, s2.vector));
}

/// Plane matrix element <phi^a, Op^W(e_m) phi^c> for Gaussian states with a
/// common mu, in closed form:
///   exp(-i omega(a, c)/(2 hbar) + i omega(y, k) - (hbar^{2mu} k_p^2 + hbar^{2-2mu} k_q^2)/4),
/// with k = (c - a)/hbar + 2 pi m and y = (a + c)/2.
inline cplx plane_mode_element(Point a, Point c, double mu, double hbar, Mode m) {
  const Point k = (1.0 / hbar) * (c - a) + two_pi * Point{static_cast<double>(m.q), static_cast<double>(m.p)};
  const Point y = 0.5 * (a + c);
  const double damp = (std::pow(hbar, 2 * mu) * k.p * k.p + std::pow(hbar, 2 - 2 * mu) * k.q * k.q) / 4.0;
  return std::polar(std::exp(-damp), -omega(a, c) / (2 * hbar) + omega(y, k));
}

/// Second path for <phi^a_kappa, Op^W(f) phi^b_kappa> between raw periodized
/// Gaussian states: the lattice sum
///   sum_n (-1)^{N n_q n_p} e^{i omega(kappa, n)} e^{i omega(n, b)/(2 hbar)}
///         <phi^a, Op^W(f) phi^{b - n}>
/// over plane overlaps, truncated where the Gaussian factor is negligible.
inline cplx overlap_lattice_sum(const TorusHilbertSpace& space, const Observable& f, Point a, Point b, double mu) {
  const double hbar = space.hbar();
  const int N = space.N();
  const Point kappa = space.kappa();
  const double wq = std::pow(hbar, mu), wp = std::pow(hbar, 1 - mu);
  const int Rq = static_cast<int>(std::ceil(12 * wq)) + 1;
  const int Rp = static_cast<int>(std::ceil(12 * wp)) + 1;
  cplx acc{};
  for (int nq = -Rq; nq <= Rq; ++nq)
    for (int np = -Rp; np <= Rp; ++np) {
      const Mode n{nq, np};
      const Point nv{static_cast<double>(nq), static_cast<double>(np)};
      const Point c = b - nv;
      const double sign = ((static_cast<long long>(N) * nq * np) % 2 == 0) ? 1.0 : -1.0;
      const cplx pre = sign * std::polar(1.0, omega(kappa, nv) + omega(nv, b) / (2 * hbar));
      cplx inner{};
      f.for_each_nonzero([&](Mode m, cplx fm) { inner += fm * plane_mode_element(a, c, mu, hbar, m); });
      acc += pre * inner;
    }
  return acc;
}

/// Wigner function of |phi^a><phi^b| on the plane (Gaussian profile, common mu):
///   W(x) = e^{-i omega(a, b)/(2 hbar) + i omega(x, b - a)/hbar} hbar^{-1} pi^{-1}
///          e^{-|Sigma(x - (a + b)/2)|^2},
/// with Sigma(q, p) = (q / hbar^mu, p / hbar^{1 - mu}).
inline cplx wigner_plane(const CoherentStateSpec& s1, const CoherentStateSpec& s2, double hbar, Point x) {
  if (s1.mu != s2.mu) throw ValidationError("wigner_plane requires a common mu");
  const Point a = s1.a, b = s2.a;
  const Point d = x - 0.5 * (a + b);
  const double zq = d.q / std::pow(hbar, s1.mu), zp = d.p / std::pow(hbar, 1 - s1.mu);
  return std::polar(std::exp(-(zq * zq + zp * zp)) / (hbar * std::numbers::pi),
                    -omega(a, b) / (2 * hbar) + omega(x, b - a) / hbar);
}

}  // namespace torus
