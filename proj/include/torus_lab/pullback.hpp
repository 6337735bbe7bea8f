#pragma once

#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "torus_lab/classical.hpp"
#include "torus_lab/observable.hpp"

namespace torus {

inline constexpr int default_pullback_cap = 4096;

struct Pullback {
  Observable f;
  /// sqrt of the energy found in the top octave M/4 < |n|_inf < M/2; zero
  /// for the exact lattice transport.
  double aliasing_residual = 0.0;
  /// Sampling grid used; 0 for the exact lattice transport.
  int grid = 0;
  /// sqrt of the energy in modes removed by the output truncation.
  double discarded = 0.0;
  /// Error estimate the grid was accepted on: the top-octave energy, or the
  /// extrapolated tail beyond M/2 when only |n| <= keep is kept.
  double tail_estimate = 0.0;
};

struct PullbackOptions {
  int cap = 4096;
  /// Accepted top-octave energy relative to |f|_2.
  double tolerance = 1e-6;
  /// Keep only |n|_inf <= keep in the result; 0 keeps every resolved mode.
  int keep = 0;
  double drop_tol = 1e-15;
};

inline int next_pow2(double x) {
  int m = 1;
  while (m < x) m *= 2;
  return m;
}

/// Grid suggested by the worst-case stretching bound, 8 K e^{gamma_eps t}.
/// Recorded for reference; the sampling grid itself is chosen adaptively.
inline double stretching_bound_grid(int max_mode, double gamma_eps, int t) {
  return 8.0 * max_mode * std::exp(gamma_eps * t);
}

namespace detail {

/// In-place 2D DFT of a row-major M x M array.
inline void fft2(std::vector<cplx>& data, int M) {
  Eigen::FFT<double> fft;
  std::vector<cplx> in(static_cast<std::size_t>(M)), out(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(i) * M, M, in.begin());
    fft.fwd(out, in);
    std::copy_n(out.begin(), M, data.begin() + static_cast<std::ptrdiff_t>(i) * M);
  }
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) in[static_cast<std::size_t>(i)] = data[static_cast<std::size_t>(i) * M + j];
    fft.fwd(out, in);
    for (int i = 0; i < M; ++i) data[static_cast<std::size_t>(i) * M + j] = out[static_cast<std::size_t>(i)];
  }
}

}  // namespace detail

/// Fourier coefficients of a function sampled at (i/M, j/M), i, j = 0..M-1:
/// f_n = F^[n_p mod M][-n_q mod M] / M^2 for |n|_inf < M/2. Coefficients
/// below drop_tol are discarded.
inline Pullback fourier_from_samples(std::vector<cplx> samples, int M, double drop_tol, int keep = 0,
                                     double* second_octave = nullptr) {
  detail::fft2(samples, M);
  const int H = M / 2;
  const double scale = 1.0 / (static_cast<double>(M) * M);
  Pullback out;
  out.grid = M;
  out.f = Observable(keep > 0 ? std::min(keep, H - 1) : H - 1);
  double top = 0.0, second = 0.0, cut = 0.0;
  for (int nq = -(H - 1); nq <= H - 1; ++nq)
    for (int np = -(H - 1); np <= H - 1; ++np) {
      const int k = (np % M + M) % M;
      const int l = (-nq % M + M) % M;
      const cplx c = samples[static_cast<std::size_t>(k) * M + l] * scale;
      const int m = std::max(std::abs(nq), std::abs(np));
      if (m > M / 4) top += std::norm(c);
      else if (m > M / 8) second += std::norm(c);
      if (keep > 0 && m > keep) cut += std::norm(c);
      else if (std::abs(c) > drop_tol) out.f.set({nq, np}, c);
    }
  out.aliasing_residual = std::sqrt(top);
  out.discarded = std::sqrt(cut);
  if (second_octave) *second_octave = std::sqrt(second);
  out.f = out.f.trimmed();
  return out;
}

/// f o Phi^t for t >= 0.
///
/// When Phi is linear the result is the exact lattice transport
/// f_n e_n -> f_n e_{A^{-t} n}. Otherwise f o Phi^t is sampled on M x M
/// grids, M a power of two starting at 8K and doubled until the grid is
/// accepted, then transformed back by FFT. A grid is accepted when the top
/// octave M/4 < |n|_inf < M/2 carries at most opt.tolerance |f|_2, or when the
/// spectrum decays geometrically there and the tail beyond M/2, extrapolated
/// from the last two octaves, does. That tail is both what is missing and
/// what aliases back into the top octave. Throws CapExceeded when no grid up
/// to opt.cap qualifies.
inline Pullback pull_back(const ClassicalSystem& sys, const Observable& f, int t, const PullbackOptions& opt) {
  if (t < 0) throw ValidationError("pull_back requires t >= 0");
  if (!f.is_real()) throw ValidationError("pull_back requires a real observable");
  if (opt.cap < 1 || opt.keep < 0 || !(opt.tolerance > 0.0))
    throw ValidationError("pull_back: invalid cap, keep or tolerance");

  auto truncate = [&](Pullback p) {
    if (opt.keep <= 0 || p.f.max_mode() <= opt.keep) return p;
    Observable kept(opt.keep);
    double cut = 0.0;
    p.f.for_each_nonzero([&](Mode n, cplx c) {
      if (sup_norm(n) <= opt.keep) kept.set(n, c);
      else cut += std::norm(c);
    });
    p.f = kept.trimmed();
    p.discarded = std::sqrt(cut);
    return p;
  };

  if (t == 0 || f.is_constant()) return truncate({f, 0.0, 0});

  if (sys.is_linear()) {
    const IntMatrix2 B = sys.A.power(-t);
    std::vector<std::pair<Mode, cplx>> terms;
    std::int64_t K = 0;
    f.for_each_nonzero([&](Mode n, cplx c) {
      const Mode m = B * n;
      K = std::max(K, sup_norm(m));
      terms.emplace_back(m, c);
    });
    if (K > opt.cap)
      throw CapExceeded("pull_back: transported modes reach |n| = " + std::to_string(K) + " > cap " +
                        std::to_string(opt.cap));
    Pullback out{Observable(static_cast<int>(K)), 0.0, 0};
    for (const auto& [m, c] : terms) out.f.add(m, c);
    return truncate(out);
  }

  const MapStepper step(sys);
  const double scale = f.l2_norm();
  const double target = opt.tolerance * scale;
  int M = std::max(8, next_pow2(8.0 * f.max_mode()));
  double last_top = 0.0;
  while (true) {
    if (M > opt.cap)
      throw CapExceeded("pull_back: t = " + std::to_string(t) + " is not resolved by any grid up to cap " +
                        std::to_string(opt.cap) + " (top-octave residual " + std::to_string(last_top) + ")");
    std::vector<cplx> samples(static_cast<std::size_t>(M) * M);
    constexpr int B = MapStepper::batch_size;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i) {
      double q[B], p[B];
      for (int j0 = 0; j0 < M; j0 += B) {
        const int n = std::min(B, M - j0);
        for (int j = 0; j < n; ++j) {
          q[j] = static_cast<double>(i) / M;
          p[j] = static_cast<double>(j0 + j) / M;
        }
        step.iterate(q, p, n, t);
        f.evaluate(q, p, samples.data() + static_cast<std::size_t>(i) * M + j0, n);
      }
    }
    double second = 0.0;
    Pullback out = fourier_from_samples(std::move(samples), M, opt.drop_tol * scale, opt.keep, &second);
    const double top = out.aliasing_residual;
    out.tail_estimate = top;
    if (top <= target) return out;
    if (second > 0.0) {
      const double ratio = top / second;
      out.tail_estimate = top * ratio / (1.0 - ratio);
      if (ratio < 0.5 && out.tail_estimate <= target) return out;
    }
    last_top = top;
    M *= 2;
  }
}

inline Pullback pull_back(const ClassicalSystem& sys, const Observable& f, int t, int cap = default_pullback_cap) {
  PullbackOptions opt;
  opt.cap = cap;
  return pull_back(sys, f, t, opt);
}

}  // namespace torus
