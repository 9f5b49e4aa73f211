#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace mixdim {

template <class T>
struct real_of {
  using type = T;
};
template <class T>
struct real_of<std::complex<T>> {
  using type = T;
};
template <class T>
using real_t = typename real_of<T>::type;

inline double conj_if(double x) { return x; }
inline std::complex<double> conj_if(std::complex<double> z) { return std::conj(z); }

// Dense polynomial in monomial form, c[0] + c[1] s + c[2] s^2 + ...
template <class T>
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(std::initializer_list<T> c) : c_(c) {}
  explicit Polynomial(std::vector<T> c) : c_(std::move(c)) {}

  static Polynomial constant(T v) { return Polynomial({v}); }
  static Polynomial linear(T a, T b) { return Polynomial({a, b}); }

  const std::vector<T>& coeffs() const { return c_; }
  std::vector<T>& coeffs() { return c_; }
  std::size_t size() const { return c_.size(); }
  int degree() const { return c_.empty() ? -1 : static_cast<int>(c_.size()) - 1; }
  T coeff(std::size_t i) const { return i < c_.size() ? c_[i] : T(0); }

  T operator()(double s) const {
    T acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<T> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return Polynomial(std::move(d));
  }

  // Antiderivative vanishing at s = 0.
  Polynomial antiderivative() const {
    std::vector<T> a(c_.size() + 1, T(0));
    for (std::size_t i = 0; i < c_.size(); ++i) a[i + 1] = c_[i] / static_cast<double>(i + 1);
    return Polynomial(std::move(a));
  }

  T integral(double a, double b) const {
    auto A = antiderivative();
    return A(b) - A(a);
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Polynomial& operator*=(T a) {
    for (auto& x : c_) x *= a;
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, T s) { return a *= s; }
  friend Polynomial operator*(T s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.c_.empty() || b.c_.empty()) return {};
    std::vector<T> r(a.c_.size() + b.c_.size() - 1, T(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(r));
  }

  Polynomial conj() const {
    std::vector<T> r(c_);
    for (auto& x : r) x = conj_if(x);
    return Polynomial(std::move(r));
  }

  double max_abs_coeff() const {
    double m = 0;
    for (const auto& x : c_) m = std::max(m, static_cast<double>(std::abs(x)));
    return m;
  }

 private:
  std::vector<T> c_;
};

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
struct GaussRule {
  std::vector<double> x, w;
};

inline GaussRule gauss_legendre(int n) {
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (z * p1 - p0) / (z * z - 1);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1, p1 = z;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1;
    dp = n * (z * p1 - p0) / (z * z - 1);
    g.x[i] = z;
    g.w[i] = 2.0 / ((1 - z * z) * dp * dp);
  }
  return g;
}

}  // namespace mixdim
