#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "torus_lab/errors.hpp"
#include "torus_lab/fast_trig.hpp"
#include "torus_lab/lattice.hpp"
#include "torus_lab/observable.hpp"

namespace torus {

using Mat2 = Eigen::Matrix2d;

/// Perturbed hyperbolic map Phi = phi^epsilon o A, where phi^s is the
/// Hamiltonian flow of the real trigonometric polynomial g.
struct ClassicalSystem {
  IntMatrix2 A = default_cat_matrix();
  Observable g;
  double epsilon = 0.0;
  int flow_steps = 16;

  ClassicalSystem() = default;
  ClassicalSystem(IntMatrix2 A_, Observable g_, double eps, int steps = 16)
      : A(A_), g(std::move(g_)), epsilon(eps), flow_steps(steps) {
    validate();
  }

  void validate() const {
    require_hyperbolic(A);
    if (!g.is_real()) throw ValidationError("perturbation g must be a real trigonometric polynomial");
    if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be >= 0");
    if (flow_steps < 1) throw ValidationError("flow_steps must be positive");
  }

  /// True when Phi reduces to x -> A x mod 1.
  bool is_linear() const { return epsilon == 0.0 || g.is_constant(); }
};

/// g = cos 2 pi q + cos 2 pi p.
inline Observable default_perturbation() { return Observable::cos_q() + Observable::cos_p(); }

inline Mat2 to_mat2(const IntMatrix2& A) {
  Mat2 m;
  m << static_cast<double>(A.a), static_cast<double>(A.b), static_cast<double>(A.c), static_cast<double>(A.d);
  return m;
}

namespace detail {

/// Flattened mode list of a real g for fast evaluation of its derivatives.
class HamiltonianField {
 public:
  /// g must be real; the conjugate modes n and -n are folded into one term
  /// with doubled weight.
  explicit HamiltonianField(const Observable& g) {
    g.for_each_nonzero([&](Mode n, cplx c) {
      if (Mode{0, 0} < n) terms_.push_back({static_cast<double>(n.q), static_cast<double>(n.p), 2.0 * c});
    });
  }

  bool empty() const { return terms_.empty(); }

  /// (dq/dt, dp/dt) = (d_p g, -d_q g).
  Point velocity(Point x) const {
    double gq = 0.0, gp = 0.0;
    for (const auto& t : terms_) {
      double s, c;
      sincos_2pi(x.q * t.np - x.p * t.nq, s, c);
      // d/dtheta Re(c e^{i th}) = -Re(c) sin - Im(c) cos
      const double d = -t.c.real() * s - t.c.imag() * c;
      gq += two_pi * t.np * d;
      gp -= two_pi * t.nq * d;
    }
    return {gp, -gq};
  }

  /// velocity() on n <= batch_size points stored as separate q and p arrays.
  static constexpr int batch_size = 256;
  void velocity(const double* __restrict q, const double* __restrict p, double* __restrict vq,
                double* __restrict vp, int n) const {
    double arg[batch_size], s[batch_size], c[batch_size];
    for (int i = 0; i < n; ++i) vq[i] = vp[i] = 0.0;
    for (const auto& t : terms_) {
      for (int i = 0; i < n; ++i) arg[i] = q[i] * t.np - p[i] * t.nq;
      sincos_2pi(arg, s, c, n);
      const double cr = t.c.real(), ci = t.c.imag();
      const double wq = two_pi * t.nq, wp = two_pi * t.np;
      for (int i = 0; i < n; ++i) {
        const double d = -cr * s[i] - ci * c[i];
        vq[i] -= wq * d;
        vp[i] -= wp * d;
      }
    }
  }

  /// Derivative of the velocity field: J Hess(g) = [[g_pq, g_pp], [-g_qq, -g_qp]].
  Mat2 velocity_jacobian(Point x) const {
    double gqq = 0.0, gqp = 0.0, gpp = 0.0;
    for (const auto& t : terms_) {
      double s, c;
      sincos_2pi(x.q * t.np - x.p * t.nq, s, c);
      const double v = t.c.real() * c - t.c.imag() * s;
      const double k = -two_pi * two_pi * v;
      gqq += k * t.np * t.np;
      gpp += k * t.nq * t.nq;
      gqp -= k * t.np * t.nq;
    }
    Mat2 m;
    m << gqp, gpp, -gqq, -gqp;
    return m;
  }

 private:
  struct Term {
    double nq, np;
    cplx c;
  };
  std::vector<Term> terms_;
};

/// Largest spectral norm of J Hess(g) over a 32 x 32 mesh.
inline double velocity_gradient_bound(const HamiltonianField& F) {
  double L = 0.0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      const Mat2 m = F.velocity_jacobian({i / 32.0, j / 32.0});
      L = std::max(L, Eigen::JacobiSVD<Mat2>(m).singularValues()(0));
    }
  return L;
}

}  // namespace detail

/// RK4 substeps used for phi^{+-epsilon}: at least flow_steps, and enough
/// that epsilon * L / steps <= 0.01 with L the velocity-gradient bound, which
/// keeps the one-map position error near 1e-10 up to epsilon = 0.1.
inline int effective_flow_steps(const ClassicalSystem& sys) {
  if (sys.is_linear()) return sys.flow_steps;
  const double L = detail::velocity_gradient_bound(detail::HamiltonianField(sys.g));
  return std::max(sys.flow_steps, static_cast<int>(std::ceil(sys.epsilon * L / 0.01)));
}

/// Hamiltonian flow phi^t of g by fixed-step RK4, unreduced (no mod 1).
inline Point flow_unreduced(const detail::HamiltonianField& F, Point x, double t, int steps) {
  if (F.empty() || t == 0.0) return x;
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    const Point k1 = F.velocity(x);
    const Point k2 = F.velocity(x + (0.5 * h) * k1);
    const Point k3 = F.velocity(x + (0.5 * h) * k2);
    const Point k4 = F.velocity(x + h * k3);
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

/// flow_unreduced() on n <= HamiltonianField::batch_size points in place.
inline void flow_unreduced(const detail::HamiltonianField& F, double* __restrict q, double* __restrict p, int n,
                           double t, int steps) {
  if (F.empty() || t == 0.0) return;
  constexpr int B = detail::HamiltonianField::batch_size;
  double k1q[B], k1p[B], k2q[B], k2p[B], k3q[B], k3p[B], k4q[B], k4p[B], yq[B], yp[B];
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    F.velocity(q, p, k1q, k1p, n);
    for (int i = 0; i < n; ++i) {
      yq[i] = q[i] + 0.5 * h * k1q[i];
      yp[i] = p[i] + 0.5 * h * k1p[i];
    }
    F.velocity(yq, yp, k2q, k2p, n);
    for (int i = 0; i < n; ++i) {
      yq[i] = q[i] + 0.5 * h * k2q[i];
      yp[i] = p[i] + 0.5 * h * k2p[i];
    }
    F.velocity(yq, yp, k3q, k3p, n);
    for (int i = 0; i < n; ++i) {
      yq[i] = q[i] + h * k3q[i];
      yp[i] = p[i] + h * k3p[i];
    }
    F.velocity(yq, yp, k4q, k4p, n);
    for (int i = 0; i < n; ++i) {
      q[i] += (h / 6.0) * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
      p[i] += (h / 6.0) * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
    }
  }
}

/// phi^t(x) reduced to [0,1)^2, with steps RK4 substeps.
inline Point flow(const ClassicalSystem& sys, Point x, double t, int steps) {
  return wrap(flow_unreduced(detail::HamiltonianField(sys.g), x, t, steps));
}

/// phi^t(x) reduced to [0,1)^2, with the substep count of the time-epsilon
/// map.
inline Point flow(const ClassicalSystem& sys, Point x, double t) { return flow(sys, x, t, effective_flow_steps(sys)); }

/// phi^t(x) together with its Jacobian, integrating the variational equation
/// alongside the trajectory.
inline std::pair<Point, Mat2> flow_with_jacobian(const detail::HamiltonianField& F, Point x, double t,
                                                 int steps) {
  Mat2 D = Mat2::Identity();
  if (F.empty() || t == 0.0) return {x, D};
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    const Point k1 = F.velocity(x);
    const Mat2 j1 = F.velocity_jacobian(x) * D;
    const Point x2 = x + (0.5 * h) * k1;
    const Point k2 = F.velocity(x2);
    const Mat2 j2 = F.velocity_jacobian(x2) * (D + (0.5 * h) * j1);
    const Point x3 = x + (0.5 * h) * k2;
    const Point k3 = F.velocity(x3);
    const Mat2 j3 = F.velocity_jacobian(x3) * (D + (0.5 * h) * j2);
    const Point x4 = x + h * k3;
    const Point k4 = F.velocity(x4);
    const Mat2 j4 = F.velocity_jacobian(x4) * (D + h * j3);
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    D += (h / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
  }
  return {x, D};
}

/// Iterates Phi (or its inverse) on many points with one prepared field.
class MapStepper {
 public:
  explicit MapStepper(const ClassicalSystem& sys)
      : A_(sys.A), Ainv_(sys.A.inverse()), F_(sys.g), eps_(sys.epsilon), steps_(effective_flow_steps(sys)),
        linear_(sys.is_linear()) {}

  Point forward(Point x) const {
    const Point y = wrap(A_ * x);
    return linear_ ? y : wrap(flow_unreduced(F_, y, eps_, steps_));
  }

  Point backward(Point x) const {
    const Point y = linear_ ? x : wrap(flow_unreduced(F_, x, -eps_, steps_));
    return wrap(Ainv_ * y);
  }

  Point iterate(Point x, int t) const {
    for (int k = 0; k < t; ++k) x = forward(x);
    for (int k = 0; k > t; --k) x = backward(x);
    return x;
  }

  /// forward()/backward() on n <= batch_size points in place.
  static constexpr int batch_size = detail::HamiltonianField::batch_size;
  void forward(double* __restrict q, double* __restrict p, int n) const {
    apply_linear(A_, q, p, n);
    if (!linear_) {
      flow_unreduced(F_, q, p, n, eps_, steps_);
      wrap_all(q, p, n);
    }
  }
  void backward(double* __restrict q, double* __restrict p, int n) const {
    if (!linear_) {
      flow_unreduced(F_, q, p, n, -eps_, steps_);
      wrap_all(q, p, n);
    }
    apply_linear(Ainv_, q, p, n);
  }
  void iterate(double* __restrict q, double* __restrict p, int n, int t) const {
    for (int k = 0; k < t; ++k) forward(q, p, n);
    for (int k = 0; k > t; --k) backward(q, p, n);
  }

  /// Phi(x) and D Phi(x) = D phi^eps(A x) A.
  std::pair<Point, Mat2> forward_with_jacobian(Point x) const {
    const Point y = wrap(A_ * x);
    if (linear_) return {y, to_mat2(A_)};
    auto [z, D] = flow_with_jacobian(F_, y, eps_, steps_);
    return {wrap(z), D * to_mat2(A_)};
  }

 public:
  int steps() const { return steps_; }

 private:
  static void wrap_all(double* __restrict q, double* __restrict p, int n) {
    for (int i = 0; i < n; ++i) {
      const double a = q[i] - std::floor(q[i]);
      const double b = p[i] - std::floor(p[i]);
      q[i] = a >= 1.0 ? 0.0 : a;
      p[i] = b >= 1.0 ? 0.0 : b;
    }
  }
  static void apply_linear(const IntMatrix2& M, double* __restrict q, double* __restrict p, int n) {
    const auto a = static_cast<double>(M.a), b = static_cast<double>(M.b);
    const auto c = static_cast<double>(M.c), d = static_cast<double>(M.d);
    for (int i = 0; i < n; ++i) {
      const double x = a * q[i] + b * p[i];
      const double y = c * q[i] + d * p[i];
      q[i] = x;
      p[i] = y;
    }
    wrap_all(q, p, n);
  }

  IntMatrix2 A_, Ainv_;
  detail::HamiltonianField F_;
  double eps_;
  int steps_;
  bool linear_;
};

/// Phi^t(x) for integer t; negative t iterates A^{-1} o phi^{-epsilon}.
inline Point perturbed_map(const ClassicalSystem& sys, Point x, int t) { return MapStepper(sys).iterate(x, t); }

struct ExponentData {
  double gamma_A = 0.0;
  double gamma_g = 0.0;
  double gamma_eps = 0.0;
  Mat2 P = Mat2::Identity();
  double lyapunov_measured = 0.0;
};

/// Eigenvalues (unstable first) and unit eigenvectors of a hyperbolic A.
inline std::pair<Eigen::Vector2d, Mat2> hyperbolic_eigensystem(const IntMatrix2& A) {
  require_hyperbolic(A);
  const double tr = static_cast<double>(A.trace());
  const double disc = std::sqrt(tr * tr - 4.0);
  const double l_u = tr > 0 ? 0.5 * (tr + disc) : 0.5 * (tr - disc);
  const double l_s = 1.0 / l_u;
  auto eigvec = [&](double l) {
    // (A - l) v = 0, pick the better conditioned row.
    Eigen::Vector2d v;
    if (std::abs(static_cast<double>(A.b)) + std::abs(static_cast<double>(A.a) - l) >
        std::abs(static_cast<double>(A.c)) + std::abs(static_cast<double>(A.d) - l))
      v << static_cast<double>(A.b), l - static_cast<double>(A.a);
    else
      v << l - static_cast<double>(A.d), static_cast<double>(A.c);
    return v.normalized();
  };
  Mat2 V;
  V.col(0) = eigvec(l_u);
  V.col(1) = eigvec(l_s);
  return {Eigen::Vector2d(l_u, l_s), V};
}

/// Largest singular value of P B P^{-1}.
inline double p_norm(const Mat2& B, const Mat2& P) {
  Eigen::JacobiSVD<Mat2> svd(P * B * P.inverse());
  return svd.singularValues()(0);
}

/// Tangent-cocycle Lyapunov estimate: after a burn-in that aligns the tangent
/// vector with the unstable direction, averages ln |D Phi v| / |v|.
inline double lyapunov_estimate(const ClassicalSystem& sys, Point x0, int iterations, int burn_in = 200) {
  const MapStepper step(sys);
  Eigen::Vector2d v(1.0, 0.0);
  Point x = x0;
  double sum = 0.0;
  for (int k = 0; k < burn_in + iterations; ++k) {
    auto [y, D] = step.forward_with_jacobian(x);
    v = D * v;
    const double n = v.norm();
    v /= n;
    if (k >= burn_in) sum += std::log(n);
    x = y;
  }
  return sum / iterations;
}

/// Unit unstable direction at a, obtained by pushing a tangent vector forward
/// from Phi^{-iterations}(a).
inline Eigen::Vector2d unstable_direction(const ClassicalSystem& sys, Point a, int iterations = 40) {
  const MapStepper step(sys);
  Point x = step.iterate(a, -iterations);
  Eigen::Vector2d v(1.0, 0.0);
  for (int k = 0; k < iterations; ++k) {
    auto [y, D] = step.forward_with_jacobian(x);
    v = (D * v).normalized();
    x = y;
  }
  return v;
}

/// gamma_A from the spectrum of A; gamma_g as the largest P-norm of J Hess(g)
/// over a grid x grid mesh of the real torus; lyapunov_measured over 10^4
/// iterates (skipped when iterations = 0).
inline ExponentData exponents(const ClassicalSystem& sys, int grid = 64, int iterations = 10000) {
  if (grid < 32) throw ValidationError("exponents: grid must be >= 32");
  ExponentData e;
  const auto [lam, V] = hyperbolic_eigensystem(sys.A);
  e.gamma_A = std::log(std::abs(lam(0)));
  e.P = V.inverse();
  const detail::HamiltonianField F(sys.g);
  if (!F.empty()) {
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        const Point x{static_cast<double>(i) / grid, static_cast<double>(j) / grid};
        e.gamma_g = std::max(e.gamma_g, p_norm(F.velocity_jacobian(x), e.P));
      }
  }
  e.gamma_eps = e.gamma_A + sys.epsilon * e.gamma_g;
  if (iterations > 0) e.lyapunov_measured = lyapunov_estimate(sys, {0.1372, 0.2941}, iterations);
  return e;
}

}  // namespace torus
