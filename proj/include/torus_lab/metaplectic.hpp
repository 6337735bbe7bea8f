#pragma once

#include <cmath>
#include <string>

#include "torus_lab/lattice.hpp"
#include "torus_lab/quantization.hpp"

namespace torus {

inline constexpr double intertwining_tolerance = 1e-10;

/// max over |n|_inf <= max_mode of || U(n/N) M - M U(A^{-1} n / N) ||_F.
///
/// For unitary M this equals the Frobenius norm of
/// M^{-1} Op(e_n) M - Op(e_n o A) and bounds its operator norm from above.
inline double intertwining_residual(const TorusOperator& M, const IntMatrix2& A, int max_mode) {
  const IntMatrix2 Ainv = A.inverse();
  double worst = 0.0;
  for (int nq = -max_mode; nq <= max_mode; ++nq)
    for (int np = -max_mode; np <= max_mode; ++np) {
      const Mode n{nq, np};
      const MonomialMatrix T = translation_action(M.space, n);
      const MonomialMatrix S = translation_action(M.space, Ainv * n);
      worst = std::max(worst, (T.left_multiply(M.matrix) - S.right_multiply(M.matrix)).norm());
    }
  return worst;
}

namespace detail {

/// Deterministic dense start vector for the spectral projection.
inline Vector chirp_vector(int N, int seed) {
  Vector x(N);
  const double g = 0.6180339887498949 + 0.1 * seed;
  for (int r = 0; r < N; ++r) x(r) = std::polar(1.0, two_pi * g * r * (r + 1 + seed));
  return x / std::sqrt(static_cast<double>(N));
}

}  // namespace detail

/// Quantization M(A) of a hyperbolic toral automorphism on H_hbar(kappa),
/// characterized (up to a global phase) by
///
///   M(A)^{-1} U(n/N) M(A) = U(A^{-1} n / N)   for all n.
///
/// Construction: with T1 = U((1,0)/N) (cyclic shift) and T2 = U((0,1)/N)
/// (diagonal, eigenvalues lambda_r on psi_r) and S_i their images under
/// A^{-1}, an eigenvector w_0 of S2 for lambda_0 is obtained by the exact
/// spectral projector (1/N) sum_k (S2/lambda_0)^k, and w_{r+1} = S1 w_r / c_r
/// where T1 psi_r = c_r psi_{r+1}. Then W = [w_r] satisfies W T_i = S_i W and
/// M = W^dagger. The two generators fix every mode through the Weyl-Heisenberg
/// relations, so checking them certifies the whole family.
///
/// Throws InvalidMatrixError for non-hyperbolic A and AdmissibilityError when
/// (N, kappa, A) admits no such unitary.
inline TorusOperator metaplectic(const TorusHilbertSpace& space, const IntMatrix2& A) {
  require_hyperbolic(A);
  const int N = space.N();
  const IntMatrix2 Ainv = A.inverse();
  const MonomialMatrix T1 = translation_action(space, {1, 0});
  const MonomialMatrix T2 = translation_action(space, {0, 1});
  const MonomialMatrix S1 = translation_action(space, Ainv * Mode{1, 0});
  const MonomialMatrix S2 = translation_action(space, Ainv * Mode{0, 1});

  const cplx lambda0 = T2.phase[0];
  Vector w0;
  for (int seed = 0; seed < 4; ++seed) {
    Vector x = detail::chirp_vector(N, seed);
    Vector acc = x;
    for (int k = 1; k < N; ++k) {
      x = S2.apply(x) / lambda0;
      acc += x;
    }
    acc /= static_cast<double>(N);
    if (acc.norm() > 1e-3 / std::sqrt(static_cast<double>(N))) {
      w0 = acc.normalized();
      break;
    }
  }
  if (w0.size() == 0)
    throw AdmissibilityError("no eigenvector of the conjugated clock operator: (N=" + std::to_string(N) +
                             ", kappa, A) is not admissible");

  Matrix W(N, N);
  W.col(0) = w0;
  for (int r = 0; r + 1 < N; ++r) {
    // T1 psi_r = c_r psi_{r+1}
    const cplx c = T1.phase[static_cast<std::size_t>(r)];
    W.col(r + 1) = S1.apply(W.col(r)) / c;
  }
  TorusOperator M{W.adjoint(), space, OperatorKind::metaplectic};

  const double res = std::max({intertwining_residual(M, A, 1), unitarity_residual(M.matrix)});
  if (!(res <= intertwining_tolerance))
    throw AdmissibilityError("metaplectic intertwining residual " + std::to_string(res) +
                             " exceeds tolerance for N=" + std::to_string(N) +
                             "; kappa is not admissible for this A");
  return M;
}

/// Closed-form kernel N^{-1/2} exp(i pi (a k^2 - 2 j k + d j^2) / (N b)) for
/// b = 1 and kappa = 0; used as an independent cross-check of metaplectic().
inline Matrix metaplectic_kernel_b1(int N, const IntMatrix2& A) {
  if (A.b != 1) throw InvalidMatrixError("kernel formula implemented for b = 1 only");
  Matrix K(N, N);
  const std::int64_t twoN = 2 * static_cast<std::int64_t>(N);
  for (std::int64_t j = 0; j < N; ++j)
    for (std::int64_t k = 0; k < N; ++k) {
      const std::int64_t num = detail::pos_mod(A.a * k * k - 2 * j * k + A.d * j * j, twoN);
      K(j, k) = std::polar(1.0 / std::sqrt(static_cast<double>(N)),
                           std::numbers::pi * static_cast<double>(num) / N);
    }
  return K;
}

/// Bloch angles among the candidates {0, pi}^2 for which M(A) exists.
inline std::vector<Point> admissible_kappas(int N, const IntMatrix2& A) {
  std::vector<Point> out;
  for (double kq : {0.0, std::numbers::pi})
    for (double kp : {0.0, std::numbers::pi}) {
      try {
        (void)metaplectic(TorusHilbertSpace(N, {kq, kp}), A);
        out.push_back({kq, kp});
      } catch (const AdmissibilityError&) {
      }
    }
  return out;
}

}  // namespace torus
