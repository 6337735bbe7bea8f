#pragma once

#include <complex>
#include <string>
#include <vector>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "torus_lab/errors.hpp"
#include "torus_lab/quantization.hpp"

namespace torus {

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;          // orthonormal columns
};

/// Full eigendecomposition of a Hermitian matrix (LAPACK zheevr; only the
/// upper triangle is read).
inline HermitianEigen hermitian_eigen(const Matrix& H) {
  const auto n = static_cast<lapack_int>(H.rows());
  HermitianEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  if (n == 0) return out;
  Matrix A = H;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'A', 'U', n, A.data(), n, 0.0, 0.0, 0, 0, 0.0, &found,
                                         out.values.data(), out.vectors.data(), n, support.data());
  if (info != 0 || found != n) throw InternalError("zheevr failed, info " + std::to_string(info));
  return out;
}

struct SchurForm {
  Eigen::VectorXcd eigenvalues;  // diagonal of T
  Matrix Z;                      // unitary Schur vectors, U = Z T Z^dagger
  Matrix T;
};

/// Complex Schur decomposition (LAPACK zgees). For a normal matrix T is
/// diagonal up to rounding and the columns of Z are orthonormal eigenvectors,
/// degenerate clusters included.
inline SchurForm complex_schur(const Matrix& U) {
  const auto n = static_cast<lapack_int>(U.rows());
  SchurForm out;
  out.T = U;
  out.eigenvalues.resize(n);
  out.Z.resize(n, n);
  if (n == 0) return out;
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, out.T.data(), n, &sdim,
                                        out.eigenvalues.data(), out.Z.data(), n);
  if (info != 0) throw InternalError("zgees failed, info " + std::to_string(info));
  return out;
}

}  // namespace torus
