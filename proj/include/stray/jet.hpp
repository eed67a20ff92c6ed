#pragma once

// Truncated multivariate Taylor arithmetic ("jets") of total degree 3.
//
// A Jet<N> holds the normalized Taylor coefficients c_a of a smooth function
// of N variables around an expansion point, for every multi-index a with
// |a| <= 3. Products are truncated Cauchy convolutions, so every operation is
// exact through third order. Partial derivatives are recovered as a! * c_a.

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>

namespace stray {

inline constexpr int kJetDegree = 3;

namespace detail {

constexpr int binomial(int n, int k) {
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

template <int N>
struct JetTables {
  static constexpr int kSize = binomial(N + kJetDegree, kJetDegree);
  std::array<std::array<int, N>, kSize> exps{};
  std::array<int, kSize> degree{};
  std::array<double, kSize> factorial{};  // a! = prod a_i!
  int n_pairs = 0;
  std::array<std::array<int, 3>, kSize * kSize> pairs{};  // (lhs, rhs, out)

  constexpr int find(const std::array<int, N>& e) const {
    for (int k = 0; k < kSize; ++k)
      if (exps[k] == e) return k;
    return -1;
  }
};

template <int N>
constexpr JetTables<N> make_jet_tables() {
  JetTables<N> t;
  int count = 0;
  // Graded order: all monomials of degree 0, then 1, 2, 3.
  for (int deg = 0; deg <= kJetDegree; ++deg) {
    int total = 1;
    for (int i = 0; i < N; ++i) total *= (kJetDegree + 1);
    for (int code = 0; code < total; ++code) {
      std::array<int, N> e{};
      int c = code, s = 0;
      for (int i = 0; i < N; ++i) {
        e[i] = c % (kJetDegree + 1);
        c /= (kJetDegree + 1);
        s += e[i];
      }
      if (s != deg) continue;
      t.exps[count] = e;
      t.degree[count] = deg;
      double f = 1.0;
      for (int i = 0; i < N; ++i)
        for (int m = 2; m <= e[i]; ++m) f *= m;
      t.factorial[count] = f;
      ++count;
    }
  }
  for (int a = 0; a < t.kSize; ++a) {
    for (int b = 0; b < t.kSize; ++b) {
      if (t.degree[a] + t.degree[b] > kJetDegree) continue;
      std::array<int, N> e{};
      for (int i = 0; i < N; ++i) e[i] = t.exps[a][i] + t.exps[b][i];
      t.pairs[t.n_pairs++] = {a, b, t.find(e)};
    }
  }
  return t;
}

template <int N>
inline constexpr JetTables<N> kJetTables = make_jet_tables<N>();

}  // namespace detail

template <int N>
class Jet {
 public:
  static constexpr int kVars = N;
  static constexpr int kSize = detail::JetTables<N>::kSize;

  constexpr Jet() = default;
  constexpr Jet(double constant) { c_[0] = constant; }  // NOLINT(google-explicit-constructor)

  /// Independent variable i expanded around `at`.
  static Jet variable(int i, double at) {
    Jet j(at);
    std::array<int, N> e{};
    e[i] = 1;
    j.c_[tables().find(e)] = 1.0;
    return j;
  }

  double value() const { return c_[0]; }
  double coeff(int k) const { return c_[k]; }
  double& coeff(int k) { return c_[k]; }

  double coeff(const std::array<int, N>& exps) const {
    const int k = tables().find(exps);
    return k < 0 ? 0.0 : c_[k];
  }
  void set_coeff(const std::array<int, N>& exps, double v) { c_[tables().find(exps)] = v; }

  /// Partial derivative with respect to the listed variable indices.
  double d(int i) const { return deriv({i}); }
  double d(int i, int j) const { return deriv({i, j}); }
  double d(int i, int j, int k) const { return deriv({i, j, k}); }

  /// Jet of the partial derivative in variable i; exact through degree 2.
  Jet partial(int i) const {
    Jet r;
    const auto& t = tables();
    for (int k = 1; k < kSize; ++k) {
      const int ai = t.exps[k][i];
      if (ai == 0) continue;
      auto e = t.exps[k];
      --e[i];
      r.c_[t.find(e)] += ai * c_[k];
    }
    return r;
  }

  /// f(a0 + u) = f0 + f1 u + f2 u^2/2 + f3 u^3/6, given f and its derivatives at a0.
  Jet apply(double f0, double f1, double f2, double f3) const {
    Jet u = *this;
    u.c_[0] = 0.0;
    const Jet u2 = u * u;
    const Jet u3 = u2 * u;
    Jet r = u * f1 + u2 * (0.5 * f2) + u3 * (f3 / 6.0);
    r.c_[0] += f0;
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k < kSize; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, double s) { a.c_[0] += s; return a; }
  friend Jet operator+(double s, Jet a) { a.c_[0] += s; return a; }
  friend Jet operator-(Jet a, double s) { a.c_[0] -= s; return a; }
  friend Jet operator-(double s, const Jet& a) { return Jet(s) - a; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    const auto& t = tables();
    for (int p = 0; p < t.n_pairs; ++p) {
      const auto& [i, j, k] = t.pairs[p];
      r.c_[k] += a.c_[i] * b.c_[j];
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }
  friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
  friend Jet operator/(double s, const Jet& b) { return inverse(b) * s; }

  friend Jet inverse(const Jet& a) {
    const double x = a.value();
    const double i1 = 1.0 / x;
    return a.apply(i1, -i1 * i1, 2.0 * i1 * i1 * i1, -6.0 * i1 * i1 * i1 * i1);
  }
  friend Jet sqrt(const Jet& a) {
    const double x = a.value();
    const double s = std::sqrt(x);
    return a.apply(s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x));
  }
  friend Jet sin(const Jet& a) {
    const double s = std::sin(a.value()), c = std::cos(a.value());
    return a.apply(s, c, -s, -c);
  }
  friend Jet cos(const Jet& a) {
    const double s = std::sin(a.value()), c = std::cos(a.value());
    return a.apply(c, -s, -c, s);
  }
  friend Jet exp(const Jet& a) {
    const double e = std::exp(a.value());
    return a.apply(e, e, e, e);
  }
  friend Jet log(const Jet& a) {
    const double i1 = 1.0 / a.value();
    return a.apply(std::log(a.value()), i1, -i1 * i1, 2.0 * i1 * i1 * i1);
  }
  friend Jet atan(const Jet& a) {
    const double x = a.value();
    const double d = 1.0 / (1.0 + x * x);
    return a.apply(std::atan(x), d, -2.0 * x * d * d, (6.0 * x * x - 2.0) * d * d * d);
  }

 private:
  static constexpr const detail::JetTables<N>& tables() { return detail::kJetTables<N>; }

  double deriv(std::initializer_list<int> vars) const {
    std::array<int, N> e{};
    for (int v : vars) ++e[v];
    const auto& t = tables();
    const int k = t.find(e);
    return c_[k] * t.factorial[k];
  }

  std::array<double, kSize> c_{};
};

/// Substitute jets in M variables for the N arguments of `outer`.
template <int N, int M>
Jet<M> compose(const Jet<N>& outer, const std::array<Jet<M>, N>& inner) {
  // Powers of the zero-mean inner perturbations.
  std::array<std::array<Jet<M>, kJetDegree + 1>, N> pw;
  for (int i = 0; i < N; ++i) {
    Jet<M> d = inner[i] - inner[i].value();
    pw[i][0] = Jet<M>(1.0);
    for (int p = 1; p <= kJetDegree; ++p) pw[i][p] = pw[i][p - 1] * d;
  }
  const auto& t = detail::kJetTables<N>;
  Jet<M> r;
  for (int k = 0; k < Jet<N>::kSize; ++k) {
    const double c = outer.coeff(k);
    if (c == 0.0) continue;
    Jet<M> term(c);
    for (int i = 0; i < N; ++i)
      if (t.exps[k][i] > 0) term = term * pw[i][t.exps[k][i]];
    r += term;
  }
  return r;
}

}  // namespace stray
