#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <sstream>
#include <ostream>
#include <string>
#include <vector>

#include "torus_lab/errors.hpp"
#include "torus_lab/lattice.hpp"
#include "torus_lab/observable.hpp"

namespace torus {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// H_hbar(kappa): the N-dimensional state space over T^2 with Bloch angles
/// kappa, in the orthonormal delta-comb basis psi_r, r = 0..N-1, located at
/// q = k + r/N + kappa_q/(2 pi N). hbar is always derived as 1/(2 pi N).
class TorusHilbertSpace {
 public:
  TorusHilbertSpace(int N, Point kappa) : N_(N), kappa_(kappa) {
    if (N < 2) throw ValidationError("N must be >= 2");
    if (!(kappa.q >= 0.0 && kappa.q < two_pi && kappa.p >= 0.0 && kappa.p < two_pi))
      throw ValidationError("kappa components must lie in [0, 2 pi)");
  }
  explicit TorusHilbertSpace(int N) : TorusHilbertSpace(N, {0.0, 0.0}) {}

  int N() const { return N_; }
  int dim() const { return N_; }
  Point kappa() const { return kappa_; }
  double hbar() const { return 1.0 / (two_pi * N_); }

  /// q-position of basis vector psi_r inside [0, 1).
  double node(int r) const { return (r + kappa_.q / two_pi) / N_; }

  friend bool operator==(const TorusHilbertSpace&, const TorusHilbertSpace&) = default;

 private:
  int N_;
  Point kappa_;
};

inline TorusHilbertSpace build_space(int N, Point kappa = {0.0, 0.0}) {
  return TorusHilbertSpace(N, kappa);
}

enum class OperatorKind { translation, quantized, metaplectic, propagator, generic };

inline const char* to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::translation: return "translation";
    case OperatorKind::quantized: return "quantized";
    case OperatorKind::metaplectic: return "metaplectic";
    case OperatorKind::propagator: return "propagator";
    case OperatorKind::generic: return "generic";
  }
  return "generic";
}

/// Dense N x N matrix in the psi_r basis, tagged with what produced it.
struct TorusOperator {
  Matrix matrix;
  TorusHilbertSpace space;
  OperatorKind kind = OperatorKind::generic;

  int N() const { return space.N(); }
};

/// Monomial matrix: column r has a single entry phase[r] in row target[r].
/// Every U_hbar(n/N) has this shape, which lets products with dense
/// matrices run in O(N^2).
struct MonomialMatrix {
  std::vector<int> target;
  std::vector<cplx> phase;

  Vector apply(const Vector& v) const {
    Vector out = Vector::Zero(v.size());
    for (std::size_t r = 0; r < target.size(); ++r) out(target[r]) += phase[r] * v(static_cast<Eigen::Index>(r));
    return out;
  }

  /// this * M
  Matrix left_multiply(const Matrix& M) const {
    Matrix out = Matrix::Zero(M.rows(), M.cols());
    for (std::size_t r = 0; r < target.size(); ++r)
      out.row(target[r]) += phase[r] * M.row(static_cast<Eigen::Index>(r));
    return out;
  }

  /// M * this
  Matrix right_multiply(const Matrix& M) const {
    Matrix out = Matrix::Zero(M.rows(), M.cols());
    for (std::size_t r = 0; r < target.size(); ++r)
      out.col(static_cast<Eigen::Index>(r)) = phase[r] * M.col(target[r]);
    return out;
  }

  Matrix dense() const {
    const auto n = static_cast<Eigen::Index>(target.size());
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) out(target[static_cast<std::size_t>(r)], r) = phase[static_cast<std::size_t>(r)];
    return out;
  }
};

namespace detail {
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
inline std::int64_t pos_mod(std::int64_t a, std::int64_t b) {
  const std::int64_t r = a % b;
  return r < 0 ? r + b : r;
}
}  // namespace detail

/// U_hbar(n/N) restricted to H_hbar(kappa). Acting on psi_r it shifts the
/// comb by n_q/N and multiplies by exp(i(xi_p q - xi_q xi_p / 2)/hbar):
///
///   U psi_r = exp(-i kappa_p s + i pi (2 n_p r' - n_q n_p)/N + i n_p kappa_q/N) psi_{r'}
///
/// with r + n_q = r' + s N, 0 <= r' < N.
inline MonomialMatrix translation_action(const TorusHilbertSpace& space, Mode n) {
  const std::int64_t N = space.N();
  const Point kappa = space.kappa();
  MonomialMatrix out;
  out.target.resize(static_cast<std::size_t>(N));
  out.phase.resize(static_cast<std::size_t>(N));
  const double kappa_term = static_cast<double>(n.p) * kappa.q / static_cast<double>(N);
  for (std::int64_t r = 0; r < N; ++r) {
    const std::int64_t shifted = r + n.q;
    const std::int64_t s = detail::floor_div(shifted, N);
    const std::int64_t rp = shifted - s * N;
    // integer part of the phase, exact modulo 2N
    const std::int64_t num = detail::pos_mod(detail::pos_mod(2 * n.p, 2 * N) * rp -
                                                 detail::pos_mod(n.q, 2 * N) * detail::pos_mod(n.p, 2 * N),
                                             2 * N);
    const double angle = std::numbers::pi * static_cast<double>(num) / static_cast<double>(N) -
                         kappa.p * static_cast<double>(s) + kappa_term;
    out.target[static_cast<std::size_t>(r)] = static_cast<int>(rp);
    out.phase[static_cast<std::size_t>(r)] = std::polar(1.0, angle);
  }
  return out;
}

inline TorusOperator translation(const TorusHilbertSpace& space, Mode n) {
  return {translation_action(space, n).dense(), space, OperatorKind::translation};
}

/// Op^W(f) without the |n| <= N/2 guard. Every U_hbar(n/N) is a well defined
/// translation; modes beyond N/2 fold onto the same N x N matrices, which is
/// the Weyl quantization of a full Fourier series.
inline TorusOperator quantize_any_modes(const TorusHilbertSpace& space, const Observable& f) {
  const int N = space.N();
  Matrix M = Matrix::Zero(N, N);
  f.for_each_nonzero([&](Mode n, cplx c) {
    const MonomialMatrix U = translation_action(space, n);
    for (int r = 0; r < N; ++r) M(U.target[static_cast<std::size_t>(r)], r) += c * U.phase[static_cast<std::size_t>(r)];
  });
  return {std::move(M), space, OperatorKind::quantized};
}

inline void require_quantizable(const TorusHilbertSpace& space, const Observable& f) {
  if (2 * f.max_mode() > space.N())
    throw AliasingError("observable max_mode " + std::to_string(f.max_mode()) +
                        " exceeds N/2 = " + std::to_string(space.N() / 2));
}

/// Op^W(f) = sum_n f_n U_hbar(n/N).
inline TorusOperator quantize(const TorusHilbertSpace& space, const Observable& f) {
  require_quantizable(space, f);
  return quantize_any_modes(space, f);
}

/// Largest Weyl-Heisenberg defect
///   || U(n/N) U(m/N) - exp(i pi omega(m, n)/N) U((n+m)/N) ||_max
/// over all n, m with entries in [-bound, bound].
inline double weyl_heisenberg_residual(const TorusHilbertSpace& space, int bound) {
  const int N = space.N();
  double worst = 0.0;
  for (int nq = -bound; nq <= bound; ++nq)
    for (int np = -bound; np <= bound; ++np)
      for (int mq = -bound; mq <= bound; ++mq)
        for (int mp = -bound; mp <= bound; ++mp) {
          const Mode n{nq, np}, m{mq, mp};
          const MonomialMatrix Un = translation_action(space, n);
          const MonomialMatrix Um = translation_action(space, m);
          const MonomialMatrix Unm = translation_action(space, n + m);
          const cplx ph = std::polar(1.0, std::numbers::pi * static_cast<double>(omega(m, n)) / N);
          for (int r = 0; r < N; ++r) {
            const auto ru = static_cast<std::size_t>(r);
            const int mid = Um.target[ru];
            const int lhs_row = Un.target[static_cast<std::size_t>(mid)];
            const cplx lhs = Un.phase[static_cast<std::size_t>(mid)] * Um.phase[ru];
            if (lhs_row != Unm.target[ru]) return INFINITY;
            worst = std::max(worst, std::abs(lhs - ph * Unm.phase[ru]));
          }
        }
  return worst;
}

// ---------------------------------------------------------------------------
// Dense matrix diagnostics

inline double hermiticity_residual(const Matrix& M) {
  const double scale = std::max(1.0, M.norm());
  return (M - M.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline double unitarity_residual(const Matrix& U) {
  return (U * U.adjoint() - Matrix::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

/// Largest |eigenvalue| of the Hermitian part; equals the operator norm for
/// Hermitian input.
inline double hermitian_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  const Matrix H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Largest singular value. Hermitian input goes through the eigenvalues
/// directly; otherwise sqrt of the top eigenvalue of M^dagger M.
inline double operator_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  const double scale = M.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if ((M - M.adjoint()).cwiseAbs().maxCoeff() <= 1e-14 * scale) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(M.adjoint() * M, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// ---------------------------------------------------------------------------
// Matrix dumps: a short text header (N, kappa, kind) then row-major entries.

inline void write_operator_text(std::ostream& os, const TorusOperator& op) {
  os.precision(17);
  os << "# torus_lab operator\n";
  os << "N " << op.N() << "\n";
  os << "kappa " << op.space.kappa().q << ' ' << op.space.kappa().p << "\n";
  os << "kind " << to_string(op.kind) << "\n";
  os << "layout row-major re im\n";
  for (int i = 0; i < op.N(); ++i)
    for (int j = 0; j < op.N(); ++j)
      os << op.matrix(i, j).real() << ' ' << op.matrix(i, j).imag() << '\n';
}

/// Binary layout: the same text header terminated by "end\n", then N*N
/// little-endian (re, im) double pairs, row-major.
inline void write_operator_binary(std::ostream& os, const TorusOperator& op) {
  os.precision(17);
  os << "# torus_lab operator\nN " << op.N() << "\nkappa " << op.space.kappa().q << ' '
     << op.space.kappa().p << "\nkind " << to_string(op.kind) << "\nlayout row-major f64 re im\nend\n";
  for (int i = 0; i < op.N(); ++i)
    for (int j = 0; j < op.N(); ++j) {
      const std::array<double, 2> v{op.matrix(i, j).real(), op.matrix(i, j).imag()};
      os.write(reinterpret_cast<const char*>(v.data()), sizeof(v));
    }
}

inline TorusOperator read_operator_binary(std::istream& is) {
  std::string line, key;
  int N = 0;
  Point kappa;
  OperatorKind kind = OperatorKind::generic;
  while (std::getline(is, line) && line != "end") {
    std::istringstream ls(line);
    ls >> key;
    if (key == "N") ls >> N;
    else if (key == "kappa") ls >> kappa.q >> kappa.p;
    else if (key == "kind") {
      std::string k;
      ls >> k;
      for (auto c : {OperatorKind::translation, OperatorKind::quantized, OperatorKind::metaplectic,
                     OperatorKind::propagator, OperatorKind::generic})
        if (k == to_string(c)) kind = c;
    }
  }
  TorusHilbertSpace space(N, kappa);
  Matrix M(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      std::array<double, 2> v{};
      is.read(reinterpret_cast<char*>(v.data()), sizeof(v));
      if (!is) throw ValidationError("truncated operator dump");
      M(i, j) = {v[0], v[1]};
    }
  return {std::move(M), space, kind};
}

}  // namespace torus
