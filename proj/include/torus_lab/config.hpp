#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "torus_lab/classical.hpp"
#include "torus_lab/correlation.hpp"
#include "torus_lab/errors.hpp"
#include "torus_lab/metaplectic.hpp"
#include "torus_lab/pullback.hpp"
#include "torus_lab/states.hpp"

namespace torus {

inline const std::vector<std::string>& experiment_tags() {
  static const std::vector<std::string> tags{"algebra-check", "egorov-scan", "equidist-scan",
                                             "mixing-scan",   "spectrum",    "scarring"};
  return tags;
}

struct ExperimentConfig {
  std::string experiment;
  std::vector<int> N_list;
  IntMatrix2 A = default_cat_matrix();
  Point kappa{0.0, 0.0};
  Observable g = default_perturbation();
  std::vector<double> epsilon_list{0.01};
  double mu = 0.5;
  double nu = 0.5;
  std::vector<Point> anchors{{0.0, 0.0}, {0.137, 0.294}};
  Observable f = Observable::cos_q();
  std::vector<int> t_list;  // empty: integers in [0, ceil(1.2 t_max)]
  int pullback_cap = default_pullback_cap;
  int correlation_t_max = 8;
  int correlation_grid = 0;  // 0: smallest power of two that resolves t_max, at least 512
  double sigma = 0.05;
  std::vector<Point> centers;
  std::vector<int> center_periods{1, 2};
  int flow_steps = 16;
  int seed = 0;
  std::string output_dir = "out";

  ClassicalSystem system(double eps) const { return ClassicalSystem(A, g, eps, flow_steps); }
  TorusHilbertSpace space(int N) const { return TorusHilbertSpace(N, kappa); }
  bool needs_propagator() const {
    return experiment == "egorov-scan" || experiment == "equidist-scan" || experiment == "spectrum" ||
           experiment == "scarring";
  }
};

namespace detail {

/// Accepts "cos_q", "cos_p", "cos_q+cos_p", "one", or a list of
/// [n_q, n_p, re] / [n_q, n_p, re, im] records.
inline Observable parse_modes(const nlohmann::json& j, const std::string& key) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "cos_q") return Observable::cos_q();
    if (s == "cos_p") return Observable::cos_p();
    if (s == "cos_q+cos_p") return default_perturbation();
    if (s == "one") return Observable::constant(1.0);
    throw ValidationError(key + ": unknown preset '" + s + "'");
  }
  if (!j.is_array()) throw ValidationError(key + " must be a preset name or a list of [n_q, n_p, re, im]");
  Observable f;
  for (const auto& r : j) {
    if (!r.is_array() || r.size() < 3 || r.size() > 4)
      throw ValidationError(key + ": each mode record is [n_q, n_p, re] or [n_q, n_p, re, im]");
    const Mode n{r[0].get<std::int64_t>(), r[1].get<std::int64_t>()};
    const cplx c{r[2].get<double>(), r.size() == 4 ? r[3].get<double>() : 0.0};
    f += Observable::mode(n, c);
  }
  return f;
}

inline nlohmann::json modes_json(const Observable& f) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [n, c] : f.terms()) out.push_back({n.q, n.p, c.real(), c.imag()});
  return out;
}

inline Point parse_point(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(key + ": expected a pair [q, p]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<Point> parse_points(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array()) throw ValidationError(key + " must be a list of [q, p] pairs");
  std::vector<Point> out;
  for (const auto& p : j) out.push_back(parse_point(p, key));
  return out;
}

}  // namespace detail

/// Parses the JSON form. Every key is optional except N_list for the quantum
/// experiments; experiment may instead come from the command line. Unknown
/// keys are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  static const std::set<std::string> known{
      "experiment", "N_list",      "A",          "kappa",        "g_modes",           "epsilon_list",
      "mu",         "nu",          "anchors",    "f_modes",      "t_list",            "pullback_cap",
      "correlation_t_max", "correlation_grid", "sigma", "centers", "center_periods", "flow_steps",
      "seed",       "output_dir"};
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ValidationError("unknown config key '" + k + "'");
  ExperimentConfig c;
  try {
    if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
    if (j.contains("N_list")) c.N_list = j.at("N_list").get<std::vector<int>>();
    if (j.contains("A")) {
      const auto a = j.at("A").get<std::vector<std::vector<std::int64_t>>>();
      if (a.size() != 2 || a[0].size() != 2 || a[1].size() != 2) throw ValidationError("A must be 2x2");
      c.A = {a[0][0], a[0][1], a[1][0], a[1][1]};
    }
    if (j.contains("kappa")) c.kappa = detail::parse_point(j.at("kappa"), "kappa");
    if (j.contains("g_modes")) c.g = detail::parse_modes(j.at("g_modes"), "g_modes");
    if (j.contains("epsilon_list")) c.epsilon_list = j.at("epsilon_list").get<std::vector<double>>();
    if (j.contains("mu")) c.mu = j.at("mu").get<double>();
    if (j.contains("nu")) c.nu = j.at("nu").get<double>();
    if (j.contains("anchors")) c.anchors = detail::parse_points(j.at("anchors"), "anchors");
    if (j.contains("f_modes")) c.f = detail::parse_modes(j.at("f_modes"), "f_modes");
    if (j.contains("t_list")) c.t_list = j.at("t_list").get<std::vector<int>>();
    if (j.contains("pullback_cap")) c.pullback_cap = j.at("pullback_cap").get<int>();
    if (j.contains("correlation_t_max")) c.correlation_t_max = j.at("correlation_t_max").get<int>();
    if (j.contains("correlation_grid")) c.correlation_grid = j.at("correlation_grid").get<int>();
    if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
    if (j.contains("centers")) c.centers = detail::parse_points(j.at("centers"), "centers");
    if (j.contains("center_periods")) c.center_periods = j.at("center_periods").get<std::vector<int>>();
    if (j.contains("flow_steps")) c.flow_steps = j.at("flow_steps").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<int>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

/// Checks the preconditions of every operation the experiment will call.
inline void validate(const ExperimentConfig& c) {
  const auto& tags = experiment_tags();
  if (std::find(tags.begin(), tags.end(), c.experiment) == tags.end())
    throw ValidationError("unknown experiment '" + c.experiment + "'");
  require_hyperbolic(c.A);
  if (!(c.kappa.q >= 0.0 && c.kappa.q < two_pi && c.kappa.p >= 0.0 && c.kappa.p < two_pi))
    throw ValidationError("kappa components must lie in [0, 2 pi)");
  if (!c.g.is_real()) throw ValidationError("g_modes must describe a real function");
  if (!c.f.is_real()) throw ValidationError("f_modes must describe a real function");
  if (c.epsilon_list.empty()) throw ValidationError("epsilon_list must not be empty");
  for (double e : c.epsilon_list)
    if (!(e >= 0.0 && std::isfinite(e))) throw ValidationError("epsilon must be finite and >= 0");
  if (!(c.mu > 0.0 && c.mu < 1.0)) throw ValidationError("mu must lie in (0, 1), got " + std::to_string(c.mu));
  if (!(c.nu > 0.0 && c.nu < 2.0)) throw ValidationError("nu must lie in (0, 2), got " + std::to_string(c.nu));
  for (int t : c.t_list)
    if (t < 0) throw ValidationError("t_list entries must be >= 0");
  if (c.pullback_cap < 8) throw ValidationError("pullback_cap must be >= 8");
  if (c.flow_steps < 1) throw ValidationError("flow_steps must be >= 1");
  for (int p : c.center_periods)
    if (p < 1) throw ValidationError("center_periods entries must be >= 1");

  if (c.experiment == "mixing-scan") {
    if (c.correlation_t_max < 1) throw ValidationError("correlation_t_max must be >= 1");
    if (c.correlation_grid < 0) throw ValidationError("correlation_grid must be >= 0");
    if (c.correlation_grid > 0) {
      const double need = required_correlation_grid(c.system(0.0), c.f.max_mode(), c.correlation_t_max);
      if (c.correlation_grid < need)
        throw CapExceeded("correlation_grid " + std::to_string(c.correlation_grid) + " cannot resolve t_max " +
                          std::to_string(c.correlation_t_max));
    }
    return;
  }

  if (c.N_list.empty()) throw ValidationError("N_list must not be empty");
  for (int N : c.N_list) {
    if (N < 2) throw ValidationError("every N must be >= 2");
    const TorusHilbertSpace s = c.space(N);
    if (c.experiment != "algebra-check" && c.experiment != "spectrum" && c.experiment != "scarring")
      require_quantizable(s, c.f);
    if (c.experiment == "scarring") {
      if (!(c.sigma > 0.0 && c.sigma < 0.5)) throw ValidationError("sigma must lie in (0, 1/2)");
      if (!(std::pow(s.hbar(), 0.5 - c.sigma) < 0.5))
        throw ValidationError("scarring radius hbar^(1/2 - sigma) must be below 1/2 at N = " + std::to_string(N));
    }
    if (c.needs_propagator()) {
      for (double e : c.epsilon_list)
        if (e > 0.0) require_quantizable(s, c.g);
      (void)metaplectic(s, c.A);  // AdmissibilityError before any scan starts
    }
  }
  if (c.experiment == "equidist-scan" && c.anchors.empty()) throw ValidationError("anchors must not be empty");
}

/// Normalized echo of the configuration, defaults filled in.
inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = c.experiment;
  j["N_list"] = c.N_list;
  j["A"] = {{c.A.a, c.A.b}, {c.A.c, c.A.d}};
  j["kappa"] = {c.kappa.q, c.kappa.p};
  j["g_modes"] = detail::modes_json(c.g);
  j["epsilon_list"] = c.epsilon_list;
  j["mu"] = c.mu;
  j["nu"] = c.nu;
  auto pts = [](const std::vector<Point>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const Point& p : v) a.push_back({p.q, p.p});
    return a;
  };
  j["anchors"] = pts(c.anchors);
  j["f_modes"] = detail::modes_json(c.f);
  j["t_list"] = c.t_list;
  j["pullback_cap"] = c.pullback_cap;
  j["correlation_t_max"] = c.correlation_t_max;
  j["correlation_grid"] = c.correlation_grid;
  j["sigma"] = c.sigma;
  j["centers"] = pts(c.centers);
  j["center_periods"] = c.center_periods;
  j["flow_steps"] = c.flow_steps;
  j["seed"] = c.seed;
  return j;
}

}  // namespace torus
