#include <gtest/gtest.h>

#include "torus_lab/propagator.hpp"

using namespace torus;

namespace {

ClassicalSystem perturbed(double eps) { return ClassicalSystem(default_cat_matrix(), default_perturbation(), eps); }

}  // namespace

TEST(Propagator, EpsilonZeroIsMetaplectic) {
  const auto space = build_space(64);
  const Propagator p = build_propagator(space, perturbed(0.0));
  EXPECT_EQ((p.U.matrix - metaplectic(space, default_cat_matrix()).matrix).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Propagator, FirstOrderBound) {
  const auto space = build_space(64);
  const Matrix M = metaplectic(space, default_cat_matrix()).matrix;
  const double G = operator_norm(quantize(space, default_perturbation()).matrix);
  for (double eps : {1e-4, 1e-3, 0.01}) {
    const Propagator p = build_propagator(space, perturbed(eps));
    EXPECT_LE(unitarity_residual(p.U.matrix), 1e-10);
    const double bound = eps * G / space.hbar();
    const double dist = operator_norm(p.U.matrix - M);
    EXPECT_LE(dist, bound * (1 + 1e-9)) << eps;
    // The first-order term is attained up to second order.
    if (bound < 0.1) EXPECT_GE(dist, bound * (1 - bound));
  }
}

TEST(Propagator, ConstantPerturbationIsAPhase) {
  const auto space = build_space(32);
  const ClassicalSystem sys(default_cat_matrix(), Observable::constant(0.7), 0.05);
  const Propagator p = build_propagator(space, sys);
  const cplx ph = std::polar(1.0, -0.05 * 0.7 / space.hbar());
  EXPECT_LT((p.U.matrix - ph * metaplectic(space, default_cat_matrix()).matrix).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Egorov, TimeZeroIsExact) {
  const Propagator p = build_propagator(build_space(32), perturbed(0.05));
  EXPECT_LE(egorov_defect(p, Observable::cos_q() + 0.2 * Observable::cos_p(3), 0).defect, 1e-12);
}

TEST(Egorov, ExactForTheLinearMap) {
  const Propagator p = build_propagator(build_space(64), perturbed(0.0));
  for (int t = 1; t <= 5; ++t) {
    const EgorovDefect d = egorov_defect(p, Observable::cos_q() + 0.3 * Observable::mode({1, 1}) +
                                                0.3 * Observable::mode({-1, -1}), t);
    EXPECT_LE(d.defect, 1e-10) << t;
    // Beyond t = 3 the transported modes leave |n| <= N/2 and the truncated
    // comparison loses them.
    if (t <= 3) EXPECT_LE(d.truncated_defect, 1e-10) << t;
  }
}

TEST(Egorov, SharedPullbackMatchesDirectCall) {
  const auto sys = perturbed(0.02);
  const Pullback pb = pull_back(sys, Observable::cos_q(), 1);
  const Propagator p = build_propagator(build_space(48), sys);
  EXPECT_EQ(egorov_defect(p, Observable::cos_q(), 1, pb).defect, egorov_defect(p, Observable::cos_q(), 1).defect);
  EXPECT_THROW(egorov_defect(p, Observable::cos_q(), 2, pb.grid), CapExceeded);
}

TEST(Egorov, DefectShrinksWithHbar) {
  double prev = 1e300;
  for (int N : {32, 64, 128}) {
    const Propagator p = build_propagator(build_space(N), perturbed(0.01));
    const EgorovDefect d = egorov_defect(p, Observable::cos_q(), 1);
    EXPECT_LT(d.defect, prev) << N;
    EXPECT_LE(d.tail_estimate, 1e-6 * Observable::cos_q().l2_norm());
    prev = d.defect;
  }
}

TEST(Ehrenfest, WorkedExample) {
  ExponentData e;
  e.gamma_eps = 1.0;
  const auto space = build_space(100);
  const EhrenfestWindow w = ehrenfest_window(space, e, 0.5, 0.1, WindowVariant::lower_mbar);
  EXPECT_NEAR(std::abs(std::log(space.hbar())), std::log(200 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(w.t_min, 0.6 * std::log(200 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(w.t_min, 3.866, 1e-3);
  EXPECT_NEAR(w.t_max, 4.081, 1e-3);
}

TEST(Ehrenfest, DegenerateAndInvalidWindows) {
  ExponentData e;
  e.gamma_eps = 1.0;
  const auto space = build_space(100);
  EXPECT_THROW(ehrenfest_window(space, e, 0.5, 1.99, WindowVariant::lower_mbar), EmptyWindow);
  EXPECT_THROW(ehrenfest_window(space, e, 0.5, 2.0, WindowVariant::lower_mbar), ValidationError);
  EXPECT_THROW(ehrenfest_window(space, e, 0.2, 0.1, WindowVariant::lower_mbar), ValidationError);
}

TEST(Ehrenfest, LowerVariantUsesSmallerExponent) {
  ExponentData e;
  e.gamma_eps = 1.0;
  const auto space = build_space(100);
  const EhrenfestWindow w = ehrenfest_window(space, e, 0.2, 0.1, WindowVariant::lower_munder);
  const double L = std::abs(std::log(space.hbar()));
  EXPECT_NEAR(w.t_min, 0.3 * L, 1e-12);
  EXPECT_DOUBLE_EQ(w.m_lower, 0.2);
  EXPECT_DOUBLE_EQ(w.m_upper, 0.8);
  EXPECT_LT(w.t_min, (0.8 + 0.1) * L);
}

TEST(Equidistribution, InitialValueAndTrivialObservable) {
  const Propagator p = build_propagator(build_space(256), perturbed(0.01));
  const auto rows = equidistribution_scan(p, {{0.0, 0.0}, 0.5}, Observable::cos_q(), {0});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_GE(rows[0].Q, 0.9);
  EXPECT_LE(rows[0].Q, 1.0);
  for (const auto& r : equidistribution_scan(p, {{0.137, 0.294}, 0.5}, Observable::constant(1.0), {3, 0, 1, 2}))
    EXPECT_LT(std::abs(r.Q), 1e-12);
}

TEST(Equidistribution, NormIsPreserved) {
  const Propagator p = build_propagator(build_space(64), perturbed(0.02));
  std::vector<int> ts;
  for (int t = 0; t <= 200; t += 25) ts.push_back(t);
  for (const auto& r : equidistribution_scan(p, {{0.3, 0.4}, 0.5}, Observable::cos_p(), ts))
    EXPECT_NEAR(r.norm, 1.0, 1e-9) << r.t;
}

TEST(Eigensystem, ResidualsOrderingAndCompleteness) {
  Propagator p = build_propagator(build_space(256), perturbed(0.02));
  const Eigensystem& E = eigensystem(p);
  EXPECT_EQ(E.size(), 256);
  EXPECT_LE(E.max_residual, 1e-9);
  EXPECT_LE(unitarity_residual(E.vectors), 1e-9);
  for (int k = 0; k < E.size(); ++k) {
    EXPECT_GE(E.phases(k), 0.0);
    EXPECT_LT(E.phases(k), two_pi);
    if (k > 0) EXPECT_LE(E.phases(k - 1), E.phases(k));
  }
  const Vector phi = coherent_state(p.space, {{0.137, 0.294}, 0.5}).vector;
  EXPECT_NEAR((E.vectors.adjoint() * phi).squaredNorm(), 1.0, 1e-10);
  EXPECT_EQ(&eigensystem(p), &E);
}

TEST(Eigensystem, DegenerateSpectrumIsDeterministic) {
  // epsilon = 0: M(A) has a small period, so eigenphases are highly degenerate.
  Propagator a = build_propagator(build_space(64), perturbed(0.0));
  Propagator b = build_propagator(build_space(64), perturbed(0.0));
  const Eigensystem& Ea = eigensystem(a);
  const Eigensystem& Eb = eigensystem(b);
  EXPECT_EQ(Ea.phases, Eb.phases);
  EXPECT_LE(Ea.max_residual, 1e-9);
  EXPECT_LE(unitarity_residual(Ea.vectors), 1e-9);
}

TEST(Scarring, ReportShapes) {
  Propagator p = build_propagator(build_space(64), perturbed(0.02));
  const ScarReport none = scarring_report(p, {}, 0.02);
  EXPECT_TRUE(none.rows.empty());
  EXPECT_FALSE(none.exploratory);
  std::vector<Point> centers = periodic_points(default_cat_matrix(), 1);
  const ScarReport rep = scarring_report(p, centers, 0.05);
  EXPECT_TRUE(rep.exploratory);
  ASSERT_EQ(rep.rows.size(), 64u);
  for (const ScarRow& r : rep.rows) {
    EXPECT_GE(r.max_mass, 0.0);
    EXPECT_LE(r.max_mass, 1.0);
    EXPECT_GE(r.center, 0);
  }
  EXPECT_NEAR(rep.radius, std::pow(p.space.hbar(), 0.45), 1e-15);
}

TEST(Scarring, EigenstateMassesAverageToBallArea) {
  // Summed over a complete eigenbasis the ball masses give N |eta|^2 times
  // the quadrature area of the ball, which is pi r^2 up to the hard edge.
  Propagator p = build_propagator(build_space(64), perturbed(0.02));
  const Eigensystem& E = eigensystem(p);
  const Point c{0.0, 0.0};
  const double r = 0.2;
  const std::vector<double> m = ball_masses(p.space, E.vectors, c, r);
  double sum = 0.0;
  for (double v : m) sum += v;
  const int M = ball_grid_size(64, r);
  const double area = static_cast<double>(ball_grid(c, r, M).size()) / (M * M);
  EXPECT_NEAR(sum / 64.0, area, 1e-8);
  EXPECT_NEAR(area, std::numbers::pi * r * r, 0.05 * std::numbers::pi * r * r);
}

TEST(Alignment, DefaultAnchorIsNotAligned) {
  const AlignmentCheck c = check_non_alignment(perturbed(0.01), {0.137, 0.294});
  EXPECT_FALSE(c.aligned);
  EXPECT_NEAR(c.angle_to_q_axis + c.angle_to_p_axis, std::numbers::pi / 2, 1e-15);
  // For epsilon = 0 the unstable direction is the eigenvector (1, sqrt 3)/2.
  const AlignmentCheck lin = check_non_alignment(perturbed(0.0), {0.137, 0.294});
  EXPECT_NEAR(lin.angle_to_q_axis, std::numbers::pi / 3, 1e-9);
}
