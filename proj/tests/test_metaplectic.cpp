#include <gtest/gtest.h>

#include "torus_lab/metaplectic.hpp"

using namespace torus;

TEST(Metaplectic, IntertwinesEveryModeUpToHalfN) {
  const auto s = build_space(64, {0.0, 0.0});
  const TorusOperator M = metaplectic(s, default_cat_matrix());
  EXPECT_EQ(M.kind, OperatorKind::metaplectic);
  EXPECT_LE(unitarity_residual(M.matrix), 1e-12);
  EXPECT_LE(intertwining_residual(M, default_cat_matrix(), 32), 1e-10);
}

TEST(Metaplectic, ColumnsHaveUnitNorm) {
  const TorusOperator M = metaplectic(build_space(32), default_cat_matrix());
  const Matrix gram = M.matrix.adjoint() * M.matrix;
  for (int k = 0; k < 32; ++k) EXPECT_NEAR(gram(k, k).real(), 1.0, 1e-12);
  EXPECT_LT((gram - Matrix::Identity(32, 32)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Metaplectic, RejectsNonHyperbolicMatrices) {
  const auto s = build_space(16);
  EXPECT_THROW(metaplectic(s, IntMatrix2::identity()), InvalidMatrixError);
  EXPECT_THROW(metaplectic(s, {1, 1, 0, 1}), InvalidMatrixError);   // parabolic
  EXPECT_THROW(metaplectic(s, {2, 1, 1, 2}), InvalidMatrixError);   // det 3
}

TEST(Metaplectic, ExactIntertwiningOnOddAndEvenDimensions) {
  for (int N : {15, 16, 63, 128})
    EXPECT_LE(intertwining_residual(metaplectic(build_space(N), default_cat_matrix()), default_cat_matrix(), 4),
              1e-10)
        << "N=" << N;
}

TEST(Metaplectic, AgreesWithClosedFormKernelUpToPhase) {
  // Independent route: the b = 1 quadratic-phase kernel.
  for (int N : {16, 31, 64}) {
    const TorusOperator M = metaplectic(build_space(N), default_cat_matrix());
    const Matrix K = metaplectic_kernel_b1(N, default_cat_matrix());
    const TorusOperator Kop{K, build_space(N), OperatorKind::metaplectic};
    EXPECT_LE(intertwining_residual(Kop, default_cat_matrix(), 5), 1e-10) << "N=" << N;
    // M = phase * K
    const cplx phase = M.matrix(0, 0) / K(0, 0);
    EXPECT_NEAR(std::abs(phase), 1.0, 1e-12);
    EXPECT_LT((M.matrix - phase * K).cwiseAbs().maxCoeff(), 1e-11) << "N=" << N;
  }
}

TEST(Metaplectic, NonCheckerboardMatrixNeedsShiftedKappa) {
  // A = [[1,1],[1,2]] has a*b odd: kappa = 0 fails for some N, a shifted
  // kappa is admissible; detected purely through the intertwining residual.
  const IntMatrix2 A{1, 1, 1, 2};
  bool found_failure = false;
  for (int N : {4, 5, 6, 7, 8}) {
    const auto ks = admissible_kappas(N, A);
    EXPECT_FALSE(ks.empty()) << "N=" << N;
    for (Point k : ks)
      EXPECT_LE(intertwining_residual(metaplectic(build_space(N, k), A), A, 3), 1e-10);
    found_failure = found_failure || std::none_of(ks.begin(), ks.end(), [](Point k) { return k == Point{}; });
  }
  EXPECT_TRUE(found_failure);
}
