#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "torus_lab/errors.hpp"
#include "torus_lab/states.hpp"

namespace torus {

/// Husimi density on the cell-centred M x M grid a_ij = ((i + 1/2)/M, (j + 1/2)/M),
/// values[i * M + j] indexed by (q, p).
struct HusimiField {
  int grid_size = 0;
  std::vector<double> values;
  TorusHilbertSpace space{2};
  /// Quadrature mass before normalization.
  double raw_mass = 0.0;

  double cell_area() const { return 1.0 / (static_cast<double>(grid_size) * grid_size); }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid_size + j]; }
  Point point(int i, int j) const { return {(i + 0.5) / grid_size, (j + 0.5) / grid_size}; }
  double mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_area();
  }
};

inline int default_husimi_grid(int N) {
  return 4 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(N))));
}

/// Raw (unnormalized) periodized coherent state with mu = 1/2, the family
/// whose grid average resolves the identity.
inline SparseState husimi_probe(const TorusHilbertSpace& space, Point a) {
  return coherent_components(space, {a, 0.5});
}

/// values = |<eta^a, state>|^2 / (2 pi hbar) on the grid, rescaled to unit
/// quadrature mass.
inline HusimiField husimi(const TorusState& state, int M) {
  if (M < 16) throw ValidationError("husimi: grid must be at least 16, got " + std::to_string(M));
  const TorusHilbertSpace& space = state.space;
  HusimiField h;
  h.grid_size = M;
  h.space = space;
  h.values.assign(static_cast<std::size_t>(M) * M, 0.0);
  const double N = space.N();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      h.values[static_cast<std::size_t>(i) * M + j] =
          N * std::norm(sparse_dot(husimi_probe(space, h.point(i, j)), state.vector));
  h.raw_mass = h.mass();
  if (h.raw_mass > 0.0)
    for (double& v : h.values) v /= h.raw_mass;
  return h;
}

inline HusimiField husimi(const TorusState& state) { return husimi(state, default_husimi_grid(state.space.N())); }

struct ResolutionCheck {
  double residual = 0.0;  // |R - Id| in operator norm
  double trace = 0.0;     // Re trace(R)
};

namespace detail {

/// R = (2 pi hbar)^{-1} M^{-2} sum over the grid of |eta^a><eta^a|, for any M.
inline ResolutionCheck resolution_residual(const TorusHilbertSpace& space, int M) {
  const int N = space.N();
  Matrix R = Matrix::Zero(N, N);
  const double w = static_cast<double>(N) / (static_cast<double>(M) * M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const SparseState s = husimi_probe(space, {(i + 0.5) / M, (j + 0.5) / M});
      for (const auto& [r, a] : s)
        for (const auto& [c, b] : s) R(r, c) += w * a * std::conj(b);
    }
  ResolutionCheck out;
  out.trace = R.trace().real();
  out.residual = operator_norm(R - Matrix::Identity(N, N));
  return out;
}

}  // namespace detail

inline ResolutionCheck resolution_check(const TorusHilbertSpace& space, int M) {
  if (static_cast<long long>(M) * M < 16LL * space.N())
    throw ValidationError("resolution_check: M^2 must be at least 16 N");
  return detail::resolution_residual(space, M);
}

/// C^2 smootherstep bump: 1 on [0, 1/2], 0 beyond 1.
inline double window_bump(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double u = 2.0 * (1.0 - s);
  return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

/// Grid points center + (k, l)/M within torus distance r of center.
inline std::vector<Point> ball_grid(Point center, double r, int M) {
  std::vector<Point> out;
  const int R = static_cast<int>(std::ceil(r * M));
  for (int k = -R; k <= R; ++k)
    for (int l = -R; l <= R; ++l) {
      const Point d{static_cast<double>(k) / M, static_cast<double>(l) / M};
      if (std::hypot(d.q, d.p) <= r && std::max(std::abs(d.q), std::abs(d.p)) < 0.5)
        out.push_back(wrap(center + d));
    }
  return out;
}

inline int ball_grid_size(int N, double r) {
  return std::max(default_husimi_grid(N), static_cast<int>(std::ceil(8.0 / r)));
}

struct Localized {
  TorusState state;
  double residual = 0.0;
};

/// Reconstructs (2 pi hbar)^{-1} int chi(|a - center|/r) <eta^a, state> eta^a da
/// by quadrature on a grid centred at center and returns it with its
/// distance from the input.
inline Localized localize(const TorusState& state, Point center, double r) {
  if (!(r > 0.0 && r < 0.5)) throw ValidationError("localize: r must lie in (0, 0.5)");
  const TorusHilbertSpace& space = state.space;
  const int M = ball_grid_size(space.N(), r);
  const std::vector<Point> pts = ball_grid(center, r, M);
  const double w = static_cast<double>(space.N()) / (static_cast<double>(M) * M);
  Vector out = Vector::Zero(space.N());
  for (const Point& a : pts) {
    const double chi = window_bump(torus_distance(a, center) / r);
    if (chi == 0.0) continue;
    const SparseState s = husimi_probe(space, a);
    const cplx lambda = chi * sparse_dot(s, state.vector);
    for (const auto& [k, c] : s) out(k) += w * lambda * c;
  }
  const double residual = (out - state.vector).norm();
  const double norm = out.norm();
  return {{std::move(out), space, norm}, residual};
}

/// Husimi mass of each column of V inside the torus ball of radius r around
/// center, on a grid of spacing 1/M anchored at center. No renormalization.
inline std::vector<double> ball_masses(const TorusHilbertSpace& space, const Matrix& V, Point center, double r,
                                       int M = 0) {
  if (!(r > 0.0 && r < 0.5)) throw ValidationError("scar_mass: r must lie in (0, 0.5)");
  if (M <= 0) M = ball_grid_size(space.N(), r);
  const std::vector<Point> pts = ball_grid(center, r, M);
  const int N = space.N();
  Matrix C = Matrix::Zero(N, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k)
    for (const auto& [i, c] : husimi_probe(space, pts[k])) C(i, static_cast<Eigen::Index>(k)) = c;
  const Matrix O = C.adjoint() * V;
  const double w = static_cast<double>(N) / (static_cast<double>(M) * M);
  std::vector<double> out(static_cast<std::size_t>(V.cols()));
  for (Eigen::Index j = 0; j < V.cols(); ++j) out[static_cast<std::size_t>(j)] = w * O.col(j).squaredNorm();
  return out;
}

inline double scar_mass(const TorusState& state, Point center, double r) {
  return ball_masses(state.space, state.vector, center, r).front();
}

inline void write_husimi_csv(std::ostream& os, const HusimiField& h) {
  os << "i,j,q,p,value\n" << std::setprecision(17);
  for (int i = 0; i < h.grid_size; ++i)
    for (int j = 0; j < h.grid_size; ++j) {
      const Point a = h.point(i, j);
      os << i << ',' << j << ',' << a.q << ',' << a.p << ',' << h.at(i, j) << '\n';
    }
}

/// Text header line "husimi M N kappa_q kappa_p\n" followed by M*M
/// little-endian doubles in row-major (q, p) order.
inline void write_husimi_binary(std::ostream& os, const HusimiField& h) {
  os << std::setprecision(17) << "husimi " << h.grid_size << ' ' << h.space.N() << ' ' << h.space.kappa().q << ' '
     << h.space.kappa().p << '\n';
  os.write(reinterpret_cast<const char*>(h.values.data()),
           static_cast<std::streamsize>(h.values.size() * sizeof(double)));
}

inline HusimiField read_husimi_binary(std::istream& is) {
  std::string tag;
  int M = 0, N = 0;
  Point kappa;
  is >> tag >> M >> N >> kappa.q >> kappa.p;
  if (tag != "husimi" || M <= 0 || N <= 0) throw ValidationError("not a Husimi binary grid");
  is.get();
  HusimiField h;
  h.grid_size = M;
  h.space = TorusHilbertSpace(N, kappa);
  h.values.resize(static_cast<std::size_t>(M) * M);
  is.read(reinterpret_cast<char*>(h.values.data()), static_cast<std::streamsize>(h.values.size() * sizeof(double)));
  if (!is) throw ValidationError("truncated Husimi binary grid");
  h.raw_mass = h.mass();
  return h;
}

}  // namespace torus
