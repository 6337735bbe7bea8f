#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "torus_lab/classical.hpp"
#include "torus_lab/husimi.hpp"
#include "torus_lab/linalg.hpp"
#include "torus_lab/metaplectic.hpp"
#include "torus_lab/pullback.hpp"
#include "torus_lab/quantization.hpp"
#include "torus_lab/states.hpp"

namespace torus {

inline constexpr double unitarity_tolerance = 1e-10;

/// Eigenphases in [0, 2 pi), ascending, with orthonormal eigenvectors as
/// columns.
struct Eigensystem {
  Eigen::VectorXd phases;
  Matrix vectors;
  double max_residual = 0.0;  // max_k |U v_k - e^{i theta_k} v_k|

  int size() const { return static_cast<int>(phases.size()); }
  TorusState state(int k, const TorusHilbertSpace& space) const { return {vectors.col(k), space, 1.0}; }
};

struct Propagator {
  TorusOperator U;
  ClassicalSystem sys;
  TorusHilbertSpace space;
  /// Filled by eigensystem(); shared between copies.
  std::shared_ptr<const Eigensystem> eig_cache;
};

/// U = exp(-i epsilon Op^W(g) / hbar) M(A), the exponential taken through the
/// Hermitian eigendecomposition of Op^W(g).
inline Propagator build_propagator(const TorusHilbertSpace& space, const ClassicalSystem& sys) {
  sys.validate();
  TorusOperator M = metaplectic(space, sys.A);
  Propagator prop{M, sys, space, nullptr};
  prop.U.kind = OperatorKind::propagator;
  if (sys.epsilon == 0.0 || sys.g.size() == 0) return prop;

  const double scale = sys.epsilon / space.hbar();
  if (sys.g.is_constant()) {
    prop.U.matrix *= std::polar(1.0, -scale * sys.g.mean().real());
    return prop;
  }
  const HermitianEigen G = hermitian_eigen(quantize(space, sys.g).matrix);
  Eigen::VectorXcd phase(G.values.size());
  for (Eigen::Index k = 0; k < phase.size(); ++k) phase(k) = std::polar(1.0, -scale * G.values(k));
  const Matrix E = G.vectors * phase.asDiagonal() * G.vectors.adjoint();
  prop.U.matrix = E * M.matrix;
  const double res = unitarity_residual(prop.U.matrix);
  if (!(res <= unitarity_tolerance))
    throw InternalError("propagator unitarity residual " + std::to_string(res) + " exceeds tolerance");
  return prop;
}

inline Matrix propagator_power(const Propagator& prop, int t) {
  if (t < 0) throw ValidationError("propagator power must be >= 0");
  Matrix P = Matrix::Identity(prop.space.N(), prop.space.N());
  for (int k = 0; k < t; ++k) P = prop.U.matrix * P;
  return P;
}

struct EgorovDefect {
  /// || U^{-t} Op^W(f) U^t - Op^W(f o Phi^t) || with the full Fourier series
  /// of the pullback quantized.
  double defect = 0.0;
  /// Same with the pullback truncated to |n|_inf <= N/2 first.
  double truncated_defect = 0.0;
  double aliasing_residual = 0.0;  // top-octave energy of the pullback
  double tail_estimate = 0.0;      // error estimate the pullback grid was accepted on
  double discarded = 0.0;          // pullback energy beyond |n| = N/2
  int grid = 0;                    // pullback sampling grid
};

/// Defect against a precomputed pullback pb = f o Phi^t, so that one
/// pullback can serve several N.
inline EgorovDefect egorov_defect(const Propagator& prop, const Observable& f, int t, const Pullback& pb) {
  if (t < 0) throw ValidationError("egorov_defect requires t >= 0");
  const TorusHilbertSpace& space = prop.space;
  const int half = space.N() / 2;
  Observable kept(std::min(half, std::max(pb.f.max_mode(), 0)));
  double cut = 0.0;
  pb.f.for_each_nonzero([&](Mode n, cplx c) {
    if (sup_norm(n) <= half) kept.set(n, c);
    else cut += std::norm(c);
  });
  const Matrix Ut = propagator_power(prop, t);
  const Matrix L = Ut.adjoint() * quantize(space, f).matrix * Ut;
  EgorovDefect d;
  d.defect = hermitian_norm(L - quantize_any_modes(space, pb.f).matrix);
  d.truncated_defect = hermitian_norm(L - quantize(space, kept).matrix);
  d.aliasing_residual = pb.aliasing_residual;
  d.tail_estimate = pb.tail_estimate;
  d.discarded = std::sqrt(cut);
  d.grid = pb.grid;
  return d;
}

inline EgorovDefect egorov_defect(const Propagator& prop, const Observable& f, int t,
                                  int cap = default_pullback_cap) {
  if (t < 0) throw ValidationError("egorov_defect requires t >= 0");
  return egorov_defect(prop, f, t, pull_back(prop.sys, f, t, cap));
}

enum class WindowVariant { lower_mbar, lower_munder };

struct EhrenfestWindow {
  double t_min = 0.0;
  double t_max = 0.0;
  double nu = 0.0;
  double mu = 0.5;
  double m_lower = 0.5;
  double m_upper = 0.5;
  WindowVariant variant = WindowVariant::lower_mbar;
};

/// (2 - nu) |ln hbar| / (3 gamma_eps).
inline double ehrenfest_t_max(double hbar, double gamma_eps, double nu) {
  return (2.0 - nu) * std::abs(std::log(hbar)) / (3.0 * gamma_eps);
}

/// t_min = (m + nu) |ln hbar| / gamma_eps with m = max(mu, 1 - mu) for
/// lower_mbar and min(mu, 1 - mu) for lower_munder; t_max as above.
inline EhrenfestWindow ehrenfest_window(const TorusHilbertSpace& space, const ExponentData& exps, double mu,
                                        double nu, WindowVariant variant) {
  if (!(nu > 0.0 && nu < 2.0)) throw ValidationError("nu must lie in (0, 2)");
  if (!(mu > 0.0 && mu < 1.0)) throw ValidationError("mu must lie in (0, 1)");
  if (variant == WindowVariant::lower_mbar && !(mu > 1.0 / 3.0 && mu < 2.0 / 3.0))
    throw ValidationError("the lower_mbar window requires 1/3 < mu < 2/3");
  if (!(exps.gamma_eps > 0.0)) throw ValidationError("gamma_eps must be positive");
  EhrenfestWindow w;
  w.nu = nu;
  w.mu = mu;
  w.variant = variant;
  w.m_lower = std::min(mu, 1.0 - mu);
  w.m_upper = std::max(mu, 1.0 - mu);
  const double L = std::abs(std::log(space.hbar()));
  const double m = variant == WindowVariant::lower_mbar ? w.m_upper : w.m_lower;
  w.t_min = (m + nu) * L / exps.gamma_eps;
  w.t_max = ehrenfest_t_max(space.hbar(), exps.gamma_eps, nu);
  if (!(w.t_min < w.t_max))
    throw EmptyWindow("Ehrenfest window is empty: t_min " + std::to_string(w.t_min) + " >= t_max " +
                      std::to_string(w.t_max));
  return w;
}

struct EquidistributionRow {
  int t = 0;
  double Q = 0.0;  // <U^t phi, Op(f) U^t phi> - f_0
  double norm = 1.0;
};

/// Q(f, t) for each t in t_list (rows sorted by t), evolving the coherent
/// state by repeated application of U.
inline std::vector<EquidistributionRow> equidistribution_scan(const Propagator& prop, const CoherentStateSpec& spec,
                                                              const Observable& f, std::vector<int> t_list) {
  if (!f.is_real()) throw ValidationError("equidistribution_scan requires a real observable");
  for (int t : t_list)
    if (t < 0) throw ValidationError("equidistribution_scan: times must be >= 0");
  require_quantizable(prop.space, f);
  std::sort(t_list.begin(), t_list.end());
  t_list.erase(std::unique(t_list.begin(), t_list.end()), t_list.end());
  std::vector<EquidistributionRow> rows;
  Vector psi = coherent_state(prop.space, spec).vector;
  int now = 0;
  for (int t : t_list) {
    for (; now < t; ++now) psi = prop.U.matrix * psi;
    const cplx v = psi.dot(apply_quantized(prop.space, f, psi));
    rows.push_back({t, (v - f.mean()).real(), psi.norm()});
  }
  return rows;
}

/// Full unitary diagonalization through the complex Schur form, sorted by
/// eigenphase. Cached on the propagator.
inline const Eigensystem& eigensystem(Propagator& prop) {
  if (prop.eig_cache) return *prop.eig_cache;
  const SchurForm S = complex_schur(prop.U.matrix);
  const int N = prop.space.N();
  std::vector<int> order(static_cast<std::size_t>(N));
  std::vector<double> theta(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    double th = std::arg(S.eigenvalues(k));
    if (th < 0) th += two_pi;
    if (th >= two_pi) th -= two_pi;
    theta[static_cast<std::size_t>(k)] = th;
    order[static_cast<std::size_t>(k)] = k;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return theta[static_cast<std::size_t>(a)] < theta[static_cast<std::size_t>(b)]; });
  auto E = std::make_shared<Eigensystem>();
  E->phases.resize(N);
  E->vectors.resize(N, N);
  for (int k = 0; k < N; ++k) {
    const int src = order[static_cast<std::size_t>(k)];
    E->phases(k) = theta[static_cast<std::size_t>(src)];
    E->vectors.col(k) = S.Z.col(src);
  }
  const Matrix R = prop.U.matrix * E->vectors;
  double worst = 0.0;
  for (int k = 0; k < N; ++k)
    worst = std::max(worst, (R.col(k) - std::polar(1.0, E->phases(k)) * E->vectors.col(k)).norm());
  E->max_residual = worst;
  prop.eig_cache = std::move(E);
  return *prop.eig_cache;
}

struct ScarRow {
  int index = 0;
  double phase = 0.0;
  double max_mass = 0.0;
  int center = -1;  // index into the center list
};

struct ScarReport {
  std::vector<ScarRow> rows;
  double radius = 0.0;
  double max_mass = 0.0;
  bool exploratory = false;  // sigma outside (0, 1/38)
};

/// For every eigenstate, the largest Husimi mass in the balls of radius
/// hbar^{1/2 - sigma} around the given centers.
inline ScarReport scarring_report(Propagator& prop, const std::vector<Point>& centers, double sigma) {
  if (!(sigma > 0.0 && sigma < 0.5)) throw ValidationError("sigma must lie in (0, 1/2)");
  ScarReport rep;
  rep.radius = std::pow(prop.space.hbar(), 0.5 - sigma);
  rep.exploratory = !(sigma < 1.0 / 38.0);
  if (!(rep.radius < 0.5)) throw ValidationError("scarring radius hbar^{1/2 - sigma} must be below 1/2");
  if (centers.empty()) return rep;
  const Eigensystem& E = eigensystem(prop);
  const int N = E.size();
  rep.rows.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) rep.rows[static_cast<std::size_t>(k)] = {k, E.phases(k), -1.0, -1};
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const std::vector<double> m = ball_masses(prop.space, E.vectors, centers[c], rep.radius);
    for (int k = 0; k < N; ++k) {
      ScarRow& row = rep.rows[static_cast<std::size_t>(k)];
      if (m[static_cast<std::size_t>(k)] > row.max_mass) {
        row.max_mass = m[static_cast<std::size_t>(k)];
        row.center = static_cast<int>(c);
      }
    }
  }
  for (const ScarRow& r : rep.rows) rep.max_mass = std::max(rep.max_mass, r.max_mass);
  return rep;
}

struct AlignmentCheck {
  double angle_to_q_axis = 0.0;  // radians, in [0, pi/2]
  double angle_to_p_axis = 0.0;
  bool aligned = false;  // within the floor of a coordinate axis
};

/// Compares the unstable direction at a with the coordinate axes.
inline AlignmentCheck check_non_alignment(const ClassicalSystem& sys, Point a, double floor = 1e-3) {
  const Eigen::Vector2d v = unstable_direction(sys, a);
  AlignmentCheck c;
  c.angle_to_q_axis = std::atan2(std::abs(v(1)), std::abs(v(0)));
  c.angle_to_p_axis = std::numbers::pi / 2 - c.angle_to_q_axis;
  c.aligned = std::min(c.angle_to_q_axis, c.angle_to_p_axis) < floor;
  return c;
}

}  // namespace torus
