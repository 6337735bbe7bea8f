#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "torus_lab/config.hpp"
#include "torus_lab/correlation.hpp"
#include "torus_lab/husimi.hpp"
#include "torus_lab/moyal.hpp"
#include "torus_lab/propagator.hpp"
#include "torus_lab/scan.hpp"

namespace torus {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

/// Least squares slope of ln y against ln x; NaN with fewer than two
/// positive points.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0 && y[k] > 0.0)) continue;
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return nan_value;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Integers 0..ceil(1.2 t_max) unless the config lists times explicitly.
inline std::vector<int> scan_times(const ExperimentConfig& c, double t_max) {
  if (!c.t_list.empty()) {
    std::vector<int> t = c.t_list;
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
  }
  std::vector<int> t;
  const int last = static_cast<int>(std::ceil(1.2 * t_max));
  for (int k = 0; k <= last; ++k) t.push_back(k);
  return t;
}

/// Mean ratio of consecutive eigenphase spacings on the circle.
inline double mean_spacing_ratio(const Eigen::VectorXd& sorted_phases) {
  const auto n = sorted_phases.size();
  if (n < 3) return nan_value;
  std::vector<double> s(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k + 1 < n; ++k) s[static_cast<std::size_t>(k)] = sorted_phases(k + 1) - sorted_phases(k);
  s.back() = sorted_phases(0) + two_pi - sorted_phases(n - 1);
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double a = s[k], b = s[(k + 1) % s.size()];
    const double hi = std::max(a, b);
    if (hi > 0.0) {
      sum += std::min(a, b) / hi;
      ++count;
    }
  }
  return count ? sum / count : nan_value;
}

struct InvariantCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass() const { return value <= tolerance; }
};

inline ScanResult algebra_check(const ExperimentConfig& c) {
  static const char* names[] = {"weyl_heisenberg", "identity", "hermiticity_f", "hermiticity_g", "intertwining"};
  ScanResult r;
  r.experiment = "algebra-check";
  r.columns = {{"N", true}, {"check", true}, {"value"}, {"tolerance"}, {"pass", true}};
  double worst_wh = 0.0;
  bool all = true;
  for (int N : c.N_list) {
    const TorusHilbertSpace s = c.space(N);
    auto add = [&](int id, double v, double tol) {
      const bool ok = v <= tol;
      all = all && ok;
      r.add_row({double(N), double(id), v, tol, ok ? 1.0 : 0.0});
    };
    const double wh = weyl_heisenberg_residual(s, 4);
    worst_wh = std::max(worst_wh, wh);
    add(0, wh, 1e-12);
    add(1, (quantize(s, Observable::constant(1.0)).matrix - Matrix::Identity(N, N)).cwiseAbs().maxCoeff(), 1e-12);
    if (2 * c.f.max_mode() <= N) add(2, hermiticity_residual(quantize(s, c.f).matrix), 1e-12);
    if (2 * c.g.max_mode() <= N) add(3, hermiticity_residual(quantize(s, c.g).matrix), 1e-12);
    add(4, intertwining_residual(metaplectic(s, c.A), c.A, std::min(10, N / 2)), intertwining_tolerance);
  }
  r.sort_rows();
  nlohmann::ordered_json legend = nlohmann::ordered_json::array();
  for (const char* n : names) legend.push_back(n);
  r.summary["check_names"] = legend;
  r.summary["max_weyl_heisenberg_residual"] = worst_wh;
  r.summary["all_pass"] = all;
  r.notes.push_back("max Weyl-Heisenberg residual " + short_num(worst_wh));
  r.notes.push_back(all ? "all algebraic checks pass" : "some algebraic checks FAIL");
  return r;
}

inline ScanResult egorov_scan(const ExperimentConfig& c) {
  ScanResult r;
  r.experiment = "egorov-scan";
  r.columns = {{"N", true},      {"epsilon"},          {"t", true}, {"hbar"},      {"defect"},
               {"truncated_defect"}, {"tail_estimate"}, {"discarded"}, {"grid", true}, {"t_max"}};
  nlohmann::ordered_json fits = nlohmann::ordered_json::array();
  for (double eps : c.epsilon_list) {
    const ClassicalSystem sys = c.system(eps);
    const ExponentData ex = exponents(sys, 64, 0);
    std::map<int, std::vector<int>> times_for_N;
    std::map<int, std::vector<int>> N_for_time;
    for (int N : c.N_list) {
      const double tm = ehrenfest_t_max(c.space(N).hbar(), ex.gamma_eps, c.nu);
      times_for_N[N] = scan_times(c, tm);
      for (int t : times_for_N[N]) N_for_time[t].push_back(N);
    }
    std::map<int, Propagator> props;
    for (int N : c.N_list) props.emplace(N, build_propagator(c.space(N), sys));
    bool exact = true;
    for (const auto& [t, Ns] : N_for_time) {
      const Pullback pb = pull_back(sys, c.f, t, c.pullback_cap);
      std::vector<double> hb, d;
      for (int N : Ns) {
        const Propagator& p = props.at(N);
        const EgorovDefect e = egorov_defect(p, c.f, t, pb);
        const double h = p.space.hbar();
        r.add_row({double(N), eps, double(t), h, e.defect, e.truncated_defect, e.tail_estimate, e.discarded,
                   double(e.grid), ehrenfest_t_max(h, ex.gamma_eps, c.nu)});
        hb.push_back(h);
        d.push_back(e.defect);
        exact = exact && e.defect <= 1e-10;
      }
      if (Ns.size() >= 2 && t > 0 && !sys.is_linear()) {
        const double slope = loglog_slope(hb, d);
        fits.push_back({{"epsilon", eps}, {"t", t}, {"slope", slope}});
        r.notes.push_back("eps " + short_num(eps) + " t " + std::to_string(t) + ": defect ~ hbar^" +
                          short_num(slope));
      }
    }
    if (sys.is_linear()) {
      r.summary["exact_regime"] = exact;
      r.notes.push_back(std::string("eps ") + short_num(eps) +
                        (exact ? ": exact regime, every defect <= 1e-10" : ": linear map but defect above 1e-10"));
    }
  }
  r.sort_rows();
  r.summary["slopes"] = fits;
  return r;
}

inline ScanResult equidist_scan(const ExperimentConfig& c) {
  ScanResult r;
  r.experiment = "equidist-scan";
  r.columns = {{"N", true}, {"epsilon"}, {"anchor", true}, {"t", true}, {"Q"},
               {"abs_Q"},   {"norm"},    {"t_min"},        {"t_max"}, {"t_star", true}};
  nlohmann::ordered_json star = nlohmann::ordered_json::array();
  nlohmann::ordered_json align = nlohmann::ordered_json::array();
  for (double eps : c.epsilon_list) {
    const ClassicalSystem sys = c.system(eps);
    const ExponentData ex = exponents(sys, 64, 0);
    for (std::size_t k = 0; k < c.anchors.size(); ++k) {
      const AlignmentCheck al = check_non_alignment(sys, wrap(c.anchors[k]));
      align.push_back({{"epsilon", eps}, {"anchor", k}, {"aligned", al.aligned},
                       {"angle_to_q_axis", al.angle_to_q_axis}});
      if (al.aligned)
        r.notes.push_back("warning: unstable direction at anchor " + std::to_string(k) + " is aligned with an axis");
    }
    for (int N : c.N_list) {
      const TorusHilbertSpace s = c.space(N);
      const Propagator p = build_propagator(s, sys);
      double t_min = nan_value;
      const double t_max = ehrenfest_t_max(s.hbar(), ex.gamma_eps, c.nu);
      try {
        t_min = ehrenfest_window(s, ex, c.mu, c.nu, WindowVariant::lower_munder).t_min;
      } catch (const EmptyWindow&) {
      }
      const int t_star = static_cast<int>(std::lround(std::abs(std::log(s.hbar())) / (2.0 * ex.gamma_eps)));
      std::vector<int> ts = scan_times(c, t_max);
      if (c.t_list.empty()) ts.push_back(t_star);
      for (std::size_t k = 0; k < c.anchors.size(); ++k) {
        const CoherentStateSpec spec{wrap(c.anchors[k]), c.mu};
        for (const EquidistributionRow& e : equidistribution_scan(p, spec, c.f, ts)) {
          r.add_row({double(N), eps, double(k), double(e.t), e.Q, std::abs(e.Q), e.norm, t_min, t_max,
                     double(t_star)});
          if (e.t == t_star) star.push_back({{"N", N}, {"epsilon", eps}, {"anchor", k}, {"t", t_star}, {"Q", e.Q}});
        }
      }
    }
  }
  r.sort_rows();
  r.summary["Q_at_t_star"] = star;
  r.summary["alignment"] = align;
  for (const auto& s : star)
    r.notes.push_back("N " + std::to_string(s["N"].get<int>()) + " eps " + short_num(s["epsilon"].get<double>()) +
                      " anchor " + std::to_string(s["anchor"].get<std::size_t>()) + ": |Q(t*=" +
                      std::to_string(s["t"].get<int>()) + ")| = " + short_num(std::abs(s["Q"].get<double>())));
  return r;
}

inline int mixing_grid(const ExperimentConfig& c, const ClassicalSystem& sys) {
  if (c.correlation_grid > 0) return c.correlation_grid;
  return std::max(512, next_pow2(required_correlation_grid(sys, c.f.max_mode(), c.correlation_t_max)));
}

inline ScanResult mixing_scan(const ExperimentConfig& c) {
  ScanResult r;
  r.experiment = "mixing-scan";
  r.columns = {{"epsilon"}, {"t", true}, {"C_re"}, {"C_im"}, {"grid", true}};
  nlohmann::ordered_json fits = nlohmann::ordered_json::array();
  for (double eps : c.epsilon_list) {
    const ClassicalSystem sys = c.system(eps);
    const int grid = mixing_grid(c, sys);
    const CorrelationResult C = correlation(sys, c.f, c.f, c.correlation_t_max, grid);
    for (std::size_t t = 0; t < C.values.size(); ++t)
      r.add_row({eps, double(t), C.values[t].real(), C.values[t].imag(), double(grid)});
    const double gamma_A = std::log(std::abs(hyperbolic_eigensystem(c.A).first(0)));
    fits.push_back({{"epsilon", eps}, {"rate", C.fit.rate}, {"t_first", C.fit.t_first}, {"t_last", C.fit.t_last},
                    {"log_residual", C.fit.residual}, {"gamma_A", gamma_A}});
    if (C.fit.t_last <= C.fit.t_first)
      r.notes.push_back("eps " + short_num(eps) + ": |C(t)| below the noise floor from t = " +
                        std::to_string(C.fit.t_first) + ", no rate fitted");
    else
      r.notes.push_back("eps " + short_num(eps) + ": fitted rate " + short_num(C.fit.rate) + " over t in [" +
                        std::to_string(C.fit.t_first) + ", " + std::to_string(C.fit.t_last) + "], gamma_A " +
                        short_num(gamma_A));
  }
  r.sort_rows();
  r.summary["fits"] = fits;
  return r;
}

inline ScanResult spectrum_scan(const ExperimentConfig& c) {
  ScanResult r;
  r.experiment = "spectrum";
  r.columns = {{"N", true}, {"epsilon"}, {"index", true}, {"phase"}};
  nlohmann::ordered_json stats = nlohmann::ordered_json::array();
  for (double eps : c.epsilon_list)
    for (int N : c.N_list) {
      Propagator p = build_propagator(c.space(N), c.system(eps));
      const Eigensystem& E = eigensystem(p);
      for (int k = 0; k < E.size(); ++k) r.add_row({double(N), eps, double(k), E.phases(k)});
      const double ratio = mean_spacing_ratio(E.phases);
      stats.push_back({{"N", N}, {"epsilon", eps}, {"max_residual", E.max_residual}, {"mean_spacing_ratio", ratio}});
      r.notes.push_back("N " + std::to_string(N) + " eps " + short_num(eps) + ": <r> = " +
                        short_num(ratio) + ", max eigen-residual " + short_num(E.max_residual));
    }
  r.sort_rows();
  r.summary["spectra"] = stats;
  return r;
}

inline std::vector<Point> scar_centers(const ExperimentConfig& c) {
  std::vector<Point> out;
  auto add = [&](Point x) {
    x = wrap(x);
    for (const Point& y : out)
      if (torus_distance(x, y) < 1e-9) return;
    out.push_back(x);
  };
  for (const Point& x : c.centers) add(x);
  for (int period : c.center_periods)
    for (const Point& x : periodic_points(c.A, period)) add(x);
  return out;
}

inline ScanResult scarring_scan(const ExperimentConfig& c) {
  ScanResult r;
  r.experiment = "scarring";
  r.columns = {{"N", true}, {"epsilon"}, {"index", true}, {"phase"}, {"max_mass"}, {"center", true}, {"radius"}};
  const std::vector<Point> centers = scar_centers(c);
  nlohmann::ordered_json maxima = nlohmann::ordered_json::array();
  bool exploratory = false;
  for (double eps : c.epsilon_list) {
    for (int N : c.N_list) {
      Propagator p = build_propagator(c.space(N), c.system(eps));
      const ScarReport rep = scarring_report(p, centers, c.sigma);
      exploratory = rep.exploratory;
      for (const ScarRow& row : rep.rows)
        r.add_row({double(N), eps, double(row.index), row.phase, row.max_mass, double(row.center), rep.radius});
      maxima.push_back({{"N", N}, {"epsilon", eps}, {"max_mass", rep.max_mass}, {"radius", rep.radius}});
      r.notes.push_back("N " + std::to_string(N) + " eps " + short_num(eps) + ": max ball mass " +
                        short_num(rep.max_mass) + " at radius " + short_num(rep.radius));
    }
  }
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const Point& x : centers) pts.push_back({x.q, x.p});
  r.summary["centers"] = pts;
  r.summary["maxima"] = maxima;
  r.summary["exploratory"] = exploratory;
  if (exploratory) r.notes.push_back("sigma >= 1/38: exploratory regime");
  r.sort_rows();
  return r;
}

inline ScanResult run_experiment(const ExperimentConfig& c) {
  if (c.experiment == "algebra-check") return algebra_check(c);
  if (c.experiment == "egorov-scan") return egorov_scan(c);
  if (c.experiment == "equidist-scan") return equidist_scan(c);
  if (c.experiment == "mixing-scan") return mixing_scan(c);
  if (c.experiment == "spectrum") return spectrum_scan(c);
  if (c.experiment == "scarring") return scarring_scan(c);
  throw ValidationError("unknown experiment '" + c.experiment + "'");
}

/// Quick invariant suite run before an experiment when requested.
inline std::vector<InvariantCheck> verify_invariants(const IntMatrix2& A = default_cat_matrix()) {
  std::vector<InvariantCheck> out;
  for (int N : {15, 16, 64}) {
    const TorusHilbertSpace s = build_space(N);
    out.push_back({"weyl_heisenberg N=" + std::to_string(N), weyl_heisenberg_residual(s, 4), 1e-12});
    out.push_back({"intertwining N=" + std::to_string(N),
                   intertwining_residual(metaplectic(s, A), A, std::min(10, N / 2)), intertwining_tolerance});
  }
  const TorusHilbertSpace s = build_space(64);
  const Observable fg = Observable::cos_q() + Observable::mode({1, 1}, 0.3) + Observable::mode({-1, -1}, 0.3);
  out.push_back({"hermiticity", hermiticity_residual(quantize(s, fg).matrix), 1e-12});
  const Propagator lin = build_propagator(s, ClassicalSystem(A, default_perturbation(), 0.0));
  double exact = 0.0;
  for (int t = 1; t <= 3; ++t) exact = std::max(exact, egorov_defect(lin, fg, t).defect);
  out.push_back({"exact_egorov", exact, 1e-10});
  const Propagator pert = build_propagator(s, ClassicalSystem(A, default_perturbation(), 0.01));
  out.push_back({"unitarity", unitarity_residual(pert.U.matrix), unitarity_tolerance});
  Vector psi = coherent_state(s, {{0.137, 0.294}, 0.5}).vector;
  for (int t = 0; t < 200; ++t) psi = pert.U.matrix * psi;
  out.push_back({"norm_after_200_steps", std::abs(psi.norm() - 1.0), 1e-9});
  out.push_back({"resolution N=16", detail::resolution_residual(build_space(16), 128).residual, 1e-6});
  return out;
}

}  // namespace torus
