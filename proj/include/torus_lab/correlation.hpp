#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "torus_lab/classical.hpp"
#include "torus_lab/observable.hpp"

namespace torus {

inline constexpr double correlation_noise_floor = 1e-12;

struct ExponentialFit {
  double rate = 0.0;       // -slope of ln|C| against t
  double intercept = 0.0;  // ln of the fitted prefactor
  double residual = 0.0;   // rms of ln|C| residuals
  int t_first = 0;
  int t_last = -1;
};

struct CorrelationResult {
  std::vector<cplx> values;  // C(0..t_max)
  ExponentialFit fit;
  int grid = 0;

  std::vector<double> real() const {
    std::vector<double> out;
    for (const cplx& c : values) out.push_back(c.real());
    return out;
  }
};

/// Least squares line through (t, ln|C(t)|) for t in [t_first, t_last],
/// shortened to the largest prefix of that range with |C| above the floor.
inline ExponentialFit fit_exponential_decay(const std::vector<cplx>& C, int t_first, int t_last,
                                            double floor = correlation_noise_floor) {
  ExponentialFit fit;
  fit.t_first = t_first;
  int last = t_first - 1;
  for (int t = t_first; t <= t_last && t < static_cast<int>(C.size()); ++t) {
    if (std::abs(C[static_cast<std::size_t>(t)]) <= floor) break;
    last = t;
  }
  fit.t_last = last;
  const int n = last - t_first + 1;
  if (n < 2) return fit;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (int t = t_first; t <= last; ++t) {
    const double y = std::log(std::abs(C[static_cast<std::size_t>(t)]));
    st += t;
    sy += y;
    stt += static_cast<double>(t) * t;
    sty += t * y;
  }
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  fit.intercept = (sy - slope * st) / n;
  fit.rate = -slope;
  double r2 = 0;
  for (int t = t_first; t <= last; ++t) {
    const double e = std::log(std::abs(C[static_cast<std::size_t>(t)])) - (fit.intercept + slope * t);
    r2 += e * e;
  }
  fit.residual = std::sqrt(r2 / n);
  return fit;
}

/// Smallest quadrature grid that resolves the split trajectories used by
/// correlation(): 2 K e^{gamma_A ceil(t_max/2)}.
inline double required_correlation_grid(const ClassicalSystem& sys, int max_mode, int t_max) {
  const double gamma_A = std::log(std::abs(hyperbolic_eigensystem(sys.A).first(0)));
  return 2.0 * max_mode * std::exp(gamma_A * ((t_max + 1) / 2));
}

/// C(t) = integral of f(Phi^t x) g2(x) dx - mean(f) mean(g2), t = 0..t_max.
///
/// By invariance of the measure the integrand is split as
/// f(Phi^{ceil(t/2)} y) g2(Phi^{-floor(t/2)} y), which halves the stretching
/// each factor sees; the integral is the grid x grid corner-point rule.
/// Throws CapExceeded when grid is below required_correlation_grid. The fit
/// covers t in [1, t_max].
inline CorrelationResult correlation(const ClassicalSystem& sys, const Observable& f, const Observable& g2,
                                     int t_max, int grid = 512) {
  if (t_max < 0) throw ValidationError("correlation: t_max must be >= 0");
  if (grid < 2) throw ValidationError("correlation: grid must be >= 2");
  const double need = required_correlation_grid(sys, std::max(f.max_mode(), g2.max_mode()), t_max);
  if (grid < need)
    throw CapExceeded("correlation: t_max = " + std::to_string(t_max) + " needs a grid of at least " +
                      std::to_string(static_cast<long long>(std::ceil(need))) + ", got " + std::to_string(grid));

  const MapStepper step(sys);
  const int T = t_max;
  const int nf = (T + 1) / 2, nb = T / 2;
  // Per-row partial sums, combined serially so the result does not depend on
  // the thread count.
  const auto stride = static_cast<std::size_t>(T + 1);
  std::vector<cplx> rows(static_cast<std::size_t>(grid) * stride);
  constexpr int B = MapStepper::batch_size;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < grid; ++i) {
    cplx* row = rows.data() + static_cast<std::size_t>(i) * stride;
    double q[B], p[B];
    std::vector<cplx> fv(static_cast<std::size_t>((nf + 1) * B)), gv(static_cast<std::size_t>((nb + 1) * B));
    for (int j0 = 0; j0 < grid; j0 += B) {
      const int n = std::min(B, grid - j0);
      auto reset = [&] {
        for (int j = 0; j < n; ++j) {
          q[j] = static_cast<double>(i) / grid;
          p[j] = static_cast<double>(j0 + j) / grid;
        }
      };
      reset();
      for (int k = 0; k <= nf; ++k) {
        if (k > 0) step.forward(q, p, n);
        f.evaluate(q, p, fv.data() + static_cast<std::size_t>(k) * B, n);
      }
      reset();
      for (int k = 0; k <= nb; ++k) {
        if (k > 0) step.backward(q, p, n);
        g2.evaluate(q, p, gv.data() + static_cast<std::size_t>(k) * B, n);
      }
      for (int t = 0; t <= T; ++t) {
        const cplx* a = fv.data() + static_cast<std::size_t>((t + 1) / 2) * B;
        const cplx* b = gv.data() + static_cast<std::size_t>(t / 2) * B;
        cplx s{};
        for (int j = 0; j < n; ++j) s += a[j] * b[j];
        row[t] += s;
      }
    }
  }
  std::vector<cplx> acc(stride);
  for (int i = 0; i < grid; ++i)
    for (std::size_t t = 0; t < stride; ++t) acc[t] += rows[static_cast<std::size_t>(i) * stride + t];

  CorrelationResult out;
  out.grid = grid;
  const double w = 1.0 / (static_cast<double>(grid) * grid);
  const cplx centering = f.mean() * g2.mean();
  for (const cplx& a : acc) out.values.push_back(a * w - centering);
  out.fit = fit_exponential_decay(out.values, 1, T);
  return out;
}

}  // namespace torus
