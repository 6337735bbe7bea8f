#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <unsupported/Eigen/FFT>

#include "torus_lab/husimi.hpp"
#include "torus_lab/states.hpp"

using namespace torus;

namespace {

// |<u, v>| = 1 with the phase removed: min over theta of |u - e^{i theta} v|.
double phase_distance(const Vector& u, const Vector& v) {
  const cplx d = v.dot(u);
  const cplx ph = std::abs(d) > 0 ? d / std::abs(d) : cplx{1.0};
  return (u - ph * v).norm();
}

Vector raw(const TorusState& s) { return s.vector * s.norm_cached; }

// Circular standard deviation of a distribution on nodes x_k (spacing 1/N)
// around the point c.
double spread(const std::vector<double>& w, const std::vector<double>& x, double c) {
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double d = centered_unit(x[k] - c);
    m0 += w[k];
    m1 += w[k] * d;
    m2 += w[k] * d * d;
  }
  m1 /= m0;
  return std::sqrt(m2 / m0 - m1 * m1);
}

TorusState flat_random(const TorusHilbertSpace& space, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, two_pi);
  Vector v(space.N());
  for (int r = 0; r < space.N(); ++r) v(r) = std::polar(1.0 / std::sqrt(space.N()), u(rng));
  return {v, space, 1.0};
}

}  // namespace

TEST(CoherentState, UnitNormAndConcentration) {
  const auto space = build_space(64);
  const TorusState s = coherent_state(space, {{0.0, 0.0}, 0.5});
  EXPECT_NEAR(s.norm(), 1.0, 1e-12);
  EXPECT_NEAR(s.norm_cached, 1.0, 1e-6);
  // The mu = 1/2 Husimi density is e^{-|x - a|^2 / (2 hbar)} / (2 pi hbar).
  // The hard-edged ball on a grid of spacing ~r/8 is accurate to about 1%.
  for (double r : {0.05, 0.1, 0.2})
    EXPECT_NEAR(scar_mass(s, {0.0, 0.0}, r), 1.0 - std::exp(-r * r / (2 * space.hbar())), 1e-2) << r;
  EXPECT_GE(scar_mass(coherent_state(build_space(256), {{0.0, 0.0}, 0.5}), {0.0, 0.0}, 0.1), 0.99);
}

TEST(CoherentState, RejectsBadMu) {
  EXPECT_THROW(coherent_state(build_space(16), {{0.1, 0.1}, 1.0}), ValidationError);
  EXPECT_THROW(coherent_state(build_space(16), {{0.1, 0.1}, 0.0}), ValidationError);
}

TEST(CoherentState, TranslationCovariance) {
  for (Point kappa : {Point{0.0, 0.0}, Point{0.7, 4.9}})
    for (int N : {32, 64}) {
      const auto space = build_space(N, kappa);
      for (Mode n : {Mode{1, 0}, Mode{0, 1}, Mode{2, -3}}) {
        const Point a{0.21, 0.64};
        const Point shifted = a + (1.0 / N) * Point{static_cast<double>(n.q), static_cast<double>(n.p)};
        const Vector moved = translation_action(space, n).apply(coherent_state(space, {a, 0.5}).vector);
        EXPECT_LT(phase_distance(coherent_state(space, {shifted, 0.5}).vector, moved), 1e-10)
            << "N=" << N << " n=(" << n.q << "," << n.p << ")";
      }
    }
}

TEST(CoherentState, SqueezingSetsMarginalWidths) {
  // Widths of the position and momentum distributions of the state itself.
  const int N = 256;
  const auto space = build_space(N);
  const double mu = 0.3;
  const Point a{0.5, 0.5};
  const TorusState s = coherent_state(space, {a, mu});
  std::vector<double> wq(N), wp(N), x(N);
  Eigen::FFT<double> fft;
  std::vector<cplx> in(s.vector.data(), s.vector.data() + N), out;
  fft.fwd(out, in);
  for (int k = 0; k < N; ++k) {
    x[static_cast<std::size_t>(k)] = static_cast<double>(k) / N;
    wq[static_cast<std::size_t>(k)] = std::norm(s.vector(k));
    wp[static_cast<std::size_t>(k)] = std::norm(out[static_cast<std::size_t>(k)]);
  }
  const double ratio = spread(wq, x, a.q) / spread(wp, x, a.p);
  const double expected = std::pow(space.hbar(), 2 * mu - 1);
  EXPECT_GT(ratio / expected, 1 / 1.2);
  EXPECT_LT(ratio / expected, 1.2);
}

TEST(Overlap, TrivialCases) {
  const auto space = build_space(64, {0.3, 0.4});
  const TorusState s = coherent_state(space, {{0.3, 0.8}, 0.5});
  EXPECT_NEAR(std::abs(overlap(space, Observable::constant(1.0), s, s) - 1.0), 0.0, 1e-12);
  const Observable f = Observable::cos_q() + 0.3 * Observable::cos_p(2);
  EXPECT_LT(std::abs(overlap(space, f, s, s).imag()), 1e-12);
  EXPECT_THROW(overlap(space, f, s, coherent_state(build_space(32), {{0.1, 0.1}, 0.5})), SpaceMismatch);
}

TEST(Overlap, GaussianOracleAtHalfPoint) {
  const auto space = build_space(128);
  const TorusState s = coherent_state(space, {{0.5, 0.5}, 0.5});
  const cplx v = overlap(space, Observable::cos_q(), s, s);
  EXPECT_GE(v.real(), -1.0);
  EXPECT_LE(v.real(), -0.9);
  // Plane value cos(2 pi a_q) e^{-pi^2 hbar}.
  EXPECT_NEAR(v.real(), -std::exp(-std::pow(std::numbers::pi, 2) * space.hbar()), 1e-8);
}

TEST(Overlap, MatrixAndLatticeSumPathsAgree) {
  const Observable f = Observable::cos_q() + Observable::mode({1, 2}, cplx{0.2, 0.1}) + 0.4 * Observable::cos_p(3);
  struct Case {
    int N;
    Point kappa, a, b;
    double mu;
  };
  for (const Case& c : {Case{16, {0, 0}, {0.1, 0.2}, {0.15, 0.25}, 0.5}, Case{17, {0, 0}, {0.9, 0.05}, {0.95, 0.02}, 0.5},
                        Case{32, {0.6, 2.1}, {0.3, 0.7}, {0.31, 0.66}, 0.4},
                        Case{64, {1.0, 5.7}, {0.5, 0.5}, {0.48, 0.53}, 0.6},
                        Case{15, {3.0, 1.0}, {0.0, 0.99}, {0.02, 0.97}, 0.5}}) {
    const auto space = build_space(c.N, c.kappa);
    const Vector u = raw(coherent_state(space, {c.a, c.mu}));
    const Vector v = raw(coherent_state(space, {c.b, c.mu}));
    const cplx direct = u.dot(apply_quantized(space, f, v));
    const cplx lattice = overlap_lattice_sum(space, f, c.a, c.b, c.mu);
    EXPECT_LT(std::abs(direct - lattice), 1e-8) << "N=" << c.N << " direct=" << direct << " lattice=" << lattice;
  }
}

TEST(Overlap, PlaneModeElementMatchesQuadrature) {
  const double hbar = 1.0 / (two_pi * 20);
  const double mu = 0.45;
  const CoherentStateSpec a{{0.3, 0.2}, mu}, c{{0.32, 0.17}, mu};
  for (Mode m : {Mode{0, 0}, Mode{1, 0}, Mode{0, 1}, Mode{1, -1}}) {
    // e_m(x) = e^{2 pi i (q m_p - p m_q)} = e^{(i/hbar) (q xi_p - p xi_q)}, xi = 2 pi hbar m, whose
    // Weyl quantization is the translation (T psi)(q) = e^{(i/hbar)(q xi_p - xi_q xi_p / 2)} psi(q - xi_q).
    const double xq = two_pi * hbar * m.q, xp = two_pi * hbar * m.p;
    const int n = 20000;
    const double lo = 0.3 - 1.5, hi = 0.3 + 1.5, h = (hi - lo) / n;
    cplx acc{};
    for (int k = 0; k <= n; ++k) {
      const double q = lo + k * h;
      const cplx t = std::polar(1.0, (q * xp - 0.5 * xq * xp) / hbar) * plane_coherent(c, hbar, q - xq);
      acc += (k == 0 || k == n ? 0.5 : 1.0) * std::conj(plane_coherent(a, hbar, q)) * t;
    }
    acc *= h;
    EXPECT_LT(std::abs(acc - plane_mode_element(a.a, c.a, mu, hbar, m)), 1e-10) << m.q << "," << m.p;
  }
}

TEST(Wigner, PeakAndNormalization) {
  const double hbar = 1.0 / (two_pi * 50);
  const CoherentStateSpec s{{0.4, 0.6}, 0.5};
  EXPECT_NEAR(wigner_plane(s, s, hbar, s.a).real(), 1.0 / (hbar * std::numbers::pi), 1e-9);
  for (double mu : {0.5, 0.3}) {
    const CoherentStateSpec t{{0.4, 0.6}, mu};
    const double wq = std::pow(hbar, mu), wp = std::pow(hbar, 1 - mu);
    const int n = 400;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Point x{t.a.q + (-10.0 + 20.0 * (i + 0.5) / n) * wq, t.a.p + (-10.0 + 20.0 * (j + 0.5) / n) * wp};
        acc += wigner_plane(t, t, hbar, x).real();
      }
    acc *= (20.0 * wq / n) * (20.0 * wp / n);
    EXPECT_NEAR(acc, 1.0, 1e-8) << "mu=" << mu;
  }
}

TEST(Wigner, ClosedFormMatchesDefiningIntegral) {
  // W(x) = (2 pi hbar)^{-1} int conj(phi^a(q - s/2)) phi^b(q + s/2) e^{-i p s / hbar} ds,
  // so that <phi^a, Op(f) phi^b> = int f W.
  const double hbar = 1.0 / (two_pi * 30);
  const double mu = 0.4;
  const CoherentStateSpec a{{0.3, 0.5}, mu}, b{{0.33, 0.46}, mu};
  for (Point x : {Point{0.31, 0.48}, Point{0.29, 0.5}, Point{0.33, 0.44}}) {
    const int n = 20000;
    const double L = 3.0;
    const double h = 2 * L / n;
    cplx acc{};
    for (int k = 0; k <= n; ++k) {
      const double s = -L + k * h;
      acc += (k == 0 || k == n ? 0.5 : 1.0) * std::conj(plane_coherent(a, hbar, x.q - s / 2)) *
             plane_coherent(b, hbar, x.q + s / 2) * std::polar(1.0, -x.p * s / hbar);
    }
    acc *= h / (two_pi * hbar);
    EXPECT_LT(std::abs(acc - wigner_plane(a, b, hbar, x)), 1e-8 * std::abs(wigner_plane(a, a, hbar, a.a)));
  }
}

TEST(Wigner, OffDiagonalModulusIsMidpointGaussian) {
  const double hbar = 1.0 / (two_pi * 40);
  const CoherentStateSpec a{{0.2, 0.3}, 0.5}, b{{0.25, 0.28}, 0.5};
  const Point m = 0.5 * (a.a + b.a);
  for (Point x : {Point{0.22, 0.29}, Point{0.2, 0.31}, Point{0.25, 0.25}}) {
    const Point d = x - m;
    const double g = std::exp(-(d.q * d.q + d.p * d.p) / hbar) / (hbar * std::numbers::pi);
    EXPECT_NEAR(std::abs(wigner_plane(a, b, hbar, x)), g, 1e-10 * g + 1e-300);
  }
}

TEST(Husimi, CoherentStatePeaksAtAnchor) {
  const auto space = build_space(64, {0.4, 1.1});
  const Point a{0.137, 0.294};
  const HusimiField h = husimi(coherent_state(space, {a, 0.5}));
  EXPECT_NEAR(h.raw_mass, 1.0, 1e-6);
  EXPECT_NEAR(h.mass(), 1.0, 1e-12);
  int best = 0;
  for (int k = 1; k < h.grid_size * h.grid_size; ++k)
    if (h.values[static_cast<std::size_t>(k)] > h.values[static_cast<std::size_t>(best)]) best = k;
  const int i = best / h.grid_size, j = best % h.grid_size;
  EXPECT_EQ(i, static_cast<int>(a.q * h.grid_size));
  EXPECT_EQ(j, static_cast<int>(a.p * h.grid_size));
}

TEST(Husimi, BasisStateIsAVerticalLine) {
  const auto space = build_space(64, {1.0, 0.0});
  const HusimiField h = husimi(basis_state(space, 0), 64);
  // Column of the node q_0 = kappa_q / (2 pi N) carries the mass, flat in p.
  const int i0 = static_cast<int>(space.node(0) * h.grid_size);
  double colmax = 0, colmin = 1e300, other = 0;
  for (int j = 0; j < h.grid_size; ++j) {
    colmax = std::max(colmax, h.at(i0, j));
    colmin = std::min(colmin, h.at(i0, j));
    other = std::max(other, h.at((i0 + h.grid_size / 2) % h.grid_size, j));
  }
  EXPECT_LT((colmax - colmin) / colmax, 1e-6);
  EXPECT_LT(other, 1e-10 * colmax);
}

TEST(Husimi, FlatRandomPhaseStatesAverageToUniform) {
  // Each Husimi value of a random-phase state is close to exponentially
  // distributed with unit mean, so the average over S seeds deviates from 1
  // by about 1/sqrt(S) RMS. The exact mixture (all basis states) is flat.
  const auto space = build_space(64);
  const int M = 32;
  auto rms_of = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += (x - 1.0) * (x - 1.0);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  std::vector<double> avg(static_cast<std::size_t>(M) * M), mixed(avg.size());
  const int S = 32;
  for (int seed = 1; seed <= S; ++seed) {
    const HusimiField h = husimi(flat_random(space, static_cast<std::uint64_t>(seed)), M);
    for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += h.values[k] / S;
  }
  for (int r = 0; r < space.N(); ++r) {
    const HusimiField h = husimi(basis_state(space, r), M);
    for (std::size_t k = 0; k < mixed.size(); ++k) mixed[k] += h.values[k] / space.N();
  }
  EXPECT_NEAR(rms_of(avg), 1.0 / std::sqrt(static_cast<double>(S)), 0.25 / std::sqrt(static_cast<double>(S)));
  EXPECT_LT(rms_of(mixed), 1e-6);
}

TEST(Husimi, RejectsSmallGrid) { EXPECT_THROW(husimi(basis_state(build_space(8), 0), 8), ValidationError); }

TEST(Husimi, CsvAndBinaryExport) {
  const auto space = build_space(16, {0.5, 0.25});
  const HusimiField h = husimi(coherent_state(space, {{0.5, 0.5}, 0.5}), 16);
  std::ostringstream csv;
  write_husimi_csv(csv, h);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 16 * 16);
  std::stringstream bin;
  write_husimi_binary(bin, h);
  const HusimiField back = read_husimi_binary(bin);
  EXPECT_EQ(back.grid_size, 16);
  EXPECT_EQ(back.space.N(), 16);
  EXPECT_EQ(back.values, h.values);
}

TEST(Resolution, IdentityAtAdequateGrid) {
  const auto space = build_space(32);
  const ResolutionCheck r = resolution_check(space, 256);
  EXPECT_LE(r.residual, 1e-6);
  EXPECT_NEAR(r.trace, 32.0, 1e-6);
}

TEST(Resolution, ResidualFallsWithGrid) {
  const auto space = build_space(32, {0.3, 0.9});
  double prev = 1e300;
  for (int M : {6, 8, 10, 12, 14, 16, 20, 24, 32}) {
    const double r = detail::resolution_residual(space, M).residual;
    if (prev > 1e-10) EXPECT_LT(r, prev) << "M=" << M;
    prev = r;
  }
  EXPECT_THROW(resolution_check(space, 16), ValidationError);
}

TEST(Resolution, UndersampledGridFails) {
  // The grid spacing must resolve the sqrt(hbar) width; at N = 32 the error
  // is still 1e-5 at M = 16 and reaches O(1) near M = 8.
  const auto space = build_space(32);
  EXPECT_GT(detail::resolution_residual(space, 8).residual, 0.1);
  EXPECT_LT(detail::resolution_residual(space, 16).residual, 1e-4);
  EXPECT_NEAR(detail::resolution_residual(space, 8).trace, 32.0, 1e-9);
}

TEST(Localize, CoherentStateAtCentreIsKept) {
  const auto space = build_space(256);
  const double r = 10 * std::sqrt(space.hbar());
  const Point c{0.3, 0.6};
  EXPECT_LE(localize(coherent_state(space, {c, 0.5}), c, r).residual, 0.05);
  EXPECT_GE(localize(coherent_state(space, {wrap(c + Point{0.5, 0.5}), 0.5}), c, r).residual, 0.9);
  EXPECT_THROW(localize(coherent_state(space, {c, 0.5}), c, 0.5), ValidationError);
}

TEST(Localize, FlatStateResidualIsOutsideMass) {
  // For the flat state the window acts as a multiplication in phase space:
  // |psi - P psi|^2 = int (1 - chi)^2 H.
  const auto space = build_space(256);
  const TorusState s = flat_random(space, 7);
  const Point c{0.5, 0.5};
  const double r = 0.45;
  const HusimiField h = husimi(s, 128);
  double outside = 0.0;
  for (int i = 0; i < h.grid_size; ++i)
    for (int j = 0; j < h.grid_size; ++j) {
      const double w = 1.0 - window_bump(torus_distance(h.point(i, j), c) / r);
      outside += w * w * h.at(i, j) * h.cell_area();
    }
  const double res = localize(s, c, r).residual;
  EXPECT_NEAR(res * res / outside, 1.0, 0.05);
}

TEST(Localize, ReconstructedStateSeesCentreValue) {
  const auto space = build_space(256);
  const TorusState s = flat_random(space, 3);
  const Point c{0.21, 0.77};
  double worst = 0.0;
  for (double r : {0.05, 0.1, 0.2}) {
    const Localized l = localize(s, c, r);
    const TorusState psi{l.state.vector / l.state.vector.norm(), space, 1.0};
    for (int k : {1, 2}) {
      for (const Observable& f : {Observable::cos_q(k), Observable::cos_p(k)}) {
        const double c1 = two_pi * k;  // C^1 norm of cos(2 pi k .)
        const double err = std::abs(overlap(space, f, psi, psi).real() - f(c).real());
        worst = std::max(worst, err / ((r + std::sqrt(space.hbar())) * c1));
      }
    }
  }
  EXPECT_LT(worst, 1.0);
}

TEST(ScarMass, Bounds) {
  const auto space = build_space(256);
  const double r = 10 * std::sqrt(space.hbar());
  const Point c{0.7, 0.2};
  EXPECT_GE(scar_mass(coherent_state(space, {c, 0.5}), c, r), 0.95);
  double avg = 0.0;
  for (std::uint64_t seed = 1; seed <= 32; ++seed) {
    const double m = scar_mass(flat_random(space, seed), c, 0.1);
    EXPECT_LE(m, 1.0);
    avg += m / 32.0;
  }
  EXPECT_NEAR(avg, std::numbers::pi * 0.01, 0.5 * std::numbers::pi * 0.01);
  EXPECT_LE(scar_mass(coherent_state(space, {c, 0.5}), c, 0.49), 1.0 + 1e-9);
}
