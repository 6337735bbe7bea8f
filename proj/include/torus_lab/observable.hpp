#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "torus_lab/errors.hpp"
#include "torus_lab/fast_trig.hpp"
#include "torus_lab/lattice.hpp"

namespace torus {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

/// e^{2 pi i v}, with v reduced mod 1 first so that large arguments keep
/// full precision.
inline cplx unit_phase(double v) {
  double s, c;
  detail::sincos_2pi(v, s, c);
  return {c, s};
}

/// Trigonometric polynomial on T^2,
///
///   f(x) = sum_n f_n exp(2 pi i omega(x, n)),   omega(x, n) = q n_p - p n_q,
///
/// with f_n = 0 whenever max(|n_q|, |n_p|) > max_mode. Only nonzero
/// coefficients are stored.
class Observable {
 public:
  Observable() : Observable(0) {}
  explicit Observable(int max_mode) : K_(max_mode) {
    if (max_mode < 0) throw ValidationError("max_mode must be non-negative");
  }

  static Observable constant(cplx c) {
    Observable f(0);
    f.set({0, 0}, c);
    return f;
  }

  /// Single Fourier mode e_n.
  static Observable mode(Mode n, cplx c = 1.0) {
    Observable f(static_cast<int>(sup_norm(n)));
    f.set(n, c);
    return f;
  }

  /// cos(2 pi k q): modes (0, +-k).
  static Observable cos_q(int k = 1, double amp = 1.0) {
    Observable f(k);
    f.set({0, k}, 0.5 * amp);
    f.set({0, -k}, 0.5 * amp);
    return f;
  }

  /// cos(2 pi k p): modes (-+k, 0).
  static Observable cos_p(int k = 1, double amp = 1.0) {
    Observable f(k);
    f.set({k, 0}, 0.5 * amp);
    f.set({-k, 0}, 0.5 * amp);
    return f;
  }

  int max_mode() const { return K_; }
  int side() const { return 2 * K_ + 1; }

  bool in_range(Mode n) const { return sup_norm(n) <= K_; }

  cplx coeff(Mode n) const {
    const auto it = coeffs_.find(n);
    return it == coeffs_.end() ? cplx{} : it->second;
  }

  void set(Mode n, cplx c) {
    if (!in_range(n)) throw ValidationError("mode outside the stored box");
    if (c == cplx{})
      coeffs_.erase(n);
    else
      coeffs_[n] = c;
  }
  void add(Mode n, cplx c) {
    if (!in_range(n)) throw ValidationError("mode outside the stored box");
    const cplx v = (coeffs_[n] += c);
    if (v == cplx{}) coeffs_.erase(n);
  }

  std::size_t size() const { return coeffs_.size(); }

  cplx mean() const { return coeff({0, 0}); }

  /// Visits every nonzero (mode, coefficient) pair in mode order.
  template <class F>
  void for_each_nonzero(F&& fn) const {
    for (const auto& [n, c] : coeffs_) fn(n, c);
  }

  std::vector<std::pair<Mode, cplx>> terms() const {
    std::vector<std::pair<Mode, cplx>> out;
    for_each_nonzero([&](Mode n, cplx c) { out.emplace_back(n, c); });
    return out;
  }

  /// f_{-n} = conj(f_n) for all n, to tolerance.
  bool is_real(double tol = 1e-12) const {
    for (const auto& [n, c] : coeffs_)
      if (std::abs(c - std::conj(coeff(-n))) > tol) return false;
    return true;
  }

  bool is_constant() const {
    bool c = true;
    for_each_nonzero([&](Mode n, cplx) { c = c && n == Mode{0, 0}; });
    return c;
  }

  cplx operator()(Point x) const {
    cplx s{};
    for_each_nonzero([&](Mode n, cplx c) { s += c * unit_phase(omega(x, n)); });
    return s;
  }

  /// Values at n points given as separate q and p arrays, n <= 256.
  void evaluate(const double* __restrict q, const double* __restrict p, cplx* __restrict out, int n) const {
    constexpr int B = 256;
    double arg[B], s[B], c[B], re[B], im[B];
    for (int i = 0; i < n; ++i) re[i] = im[i] = 0.0;
    for (const auto& [m, f] : coeffs_) {
      const auto mq = static_cast<double>(m.q), mp = static_cast<double>(m.p);
      for (int i = 0; i < n; ++i) arg[i] = q[i] * mp - p[i] * mq;
      detail::sincos_2pi(arg, s, c, n);
      const double fr = f.real(), fi = f.imag();
      for (int i = 0; i < n; ++i) {
        re[i] += fr * c[i] - fi * s[i];
        im[i] += fr * s[i] + fi * c[i];
      }
    }
    for (int i = 0; i < n; ++i) out[i] = {re[i], im[i]};
  }

  /// Sum of |f_n|; bounds the operator norm of the torus quantization.
  double l1_norm() const {
    double s = 0.0;
    for (const auto& [n, c] : coeffs_) s += std::abs(c);
    return s;
  }

  double l2_norm() const {
    double s = 0.0;
    for (const auto& [n, c] : coeffs_) s += std::norm(c);
    return std::sqrt(s);
  }

  /// Copy embedded in a box of a different size; modes outside are dropped.
  Observable resized(int new_max_mode) const {
    Observable out(new_max_mode);
    for_each_nonzero([&](Mode n, cplx c) {
      if (out.in_range(n)) out.set(n, c);
    });
    return out;
  }

  /// Smallest box that still holds every coefficient with |f_n| > tol;
  /// smaller coefficients are zeroed.
  Observable trimmed(double tol = 0.0) const {
    int k = 0;
    for_each_nonzero([&](Mode n, cplx c) {
      if (std::abs(c) > tol) k = std::max<int>(k, static_cast<int>(sup_norm(n)));
    });
    Observable out(k);
    for_each_nonzero([&](Mode n, cplx c) {
      if (std::abs(c) > tol) out.set(n, c);
    });
    return out;
  }

  /// d_q^a d_p^b f. A mode e_n picks up (2 pi i n_p)^a (-2 pi i n_q)^b.
  Observable derivative(int dq, int dp) const {
    Observable out(K_);
    for_each_nonzero([&](Mode n, cplx c) {
      const cplx fq = two_pi * I * static_cast<double>(n.p);
      const cplx fp = -two_pi * I * static_cast<double>(n.q);
      cplx v = c;
      for (int k = 0; k < dq; ++k) v *= fq;
      for (int k = 0; k < dp; ++k) v *= fp;
      out.set(n, v);
    });
    return out;
  }

  Observable conj() const {
    Observable out(K_);
    for_each_nonzero([&](Mode n, cplx c) { out.set(-n, std::conj(c)); });
    return out;
  }

  Observable& operator+=(const Observable& o) {
    if (o.K_ > K_) *this = resized(o.K_);
    o.for_each_nonzero([&](Mode n, cplx c) { add(n, c); });
    return *this;
  }
  Observable& operator*=(cplx s) {
    if (s == cplx{}) coeffs_.clear();
    for (auto& [n, c] : coeffs_) c *= s;
    return *this;
  }
  friend Observable operator+(Observable a, const Observable& b) { return a += b; }
  friend Observable operator-(Observable a, const Observable& b) {
    Observable nb = b;
    nb *= -1.0;
    return a += nb;
  }
  friend Observable operator*(cplx s, Observable a) { return a *= s; }

  /// Pointwise product; coefficients convolve.
  friend Observable operator*(const Observable& f, const Observable& g) {
    Observable out(f.K_ + g.K_);
    f.for_each_nonzero([&](Mode n, cplx a) {
      g.for_each_nonzero([&](Mode m, cplx b) { out.add(n + m, a * b); });
    });
    return out;
  }

  /// Largest coefficient difference over the union of both boxes.
  friend double max_coeff_distance(const Observable& f, const Observable& g) {
    double d = 0.0;
    for (const auto& [n, c] : f.coeffs_) d = std::max(d, std::abs(c - g.coeff(n)));
    for (const auto& [n, c] : g.coeffs_) d = std::max(d, std::abs(c - f.coeff(n)));
    return d;
  }

  /// Text records "n_q n_p re im", one nonzero mode per line.
  void write(std::ostream& os) const {
    os.precision(17);
    os << "# n_q n_p re im\n";
    for_each_nonzero([&](Mode n, cplx c) {
      os << n.q << ' ' << n.p << ' ' << c.real() << ' ' << c.imag() << '\n';
    });
  }

  static Observable read(std::istream& is) {
    std::vector<std::pair<Mode, cplx>> recs;
    std::string line;
    int K = 0;
    while (std::getline(is, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ls(line);
      Mode n;
      double re = 0.0, im = 0.0;
      if (!(ls >> n.q >> n.p >> re >> im)) throw ValidationError("malformed observable record: " + line);
      K = std::max<int>(K, static_cast<int>(sup_norm(n)));
      recs.push_back({n, {re, im}});
    }
    Observable f(K);
    for (const auto& [n, c] : recs) f.add(n, c);
    return f;
  }

 private:
  int K_;
  std::map<Mode, cplx> coeffs_;
};

}  // namespace torus
