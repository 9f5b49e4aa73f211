#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "interface.hpp"
#include "polynomial.hpp"
#include "tree_dtn.hpp"

namespace mixdim {

enum class SymbolTag { DtN, SingleLayer, DoubleLayerT, Hypersingular };

// Mode-0 behaviour of exterior fields. Bounded: u = O(1) at infinity.
// LogGrowth: u = b log(|x|/r_scale) + O(1/|x|), no free constant.
enum class Radiation { Bounded, LogGrowth };

struct ExteriorSymbol {
  SymbolTag tag = SymbolTag::DtN;
  int M = 0;
  std::vector<double> s;  // s[k + M]

  double at(int k) const { return std::abs(k) <= M ? s[k + M] : 0.0; }
};

namespace detail {
template <class F>
ExteriorSymbol make_symbol(SymbolTag tag, int M, F f) {
  ExteriorSymbol sym{tag, M, std::vector<double>(2 * M + 1)};
  for (int k = -M; k <= M; ++k) sym.s[k + M] = f(k);
  return sym;
}
inline void check_scale(double R, double r_scale) {
  if (!(R > 0 && r_scale > 0)) throw NonPositiveParameter("radius and scale must be > 0");
  if (std::abs(r_scale - R) <= 1e-14 * R)
    throw ScaleEqualsRadius("fundamental-solution scale must differ from the radius");
}
}  // namespace detail

// s_k = -|k|/R; the mode-0 value is 0 for bounded fields and
// 1/(R log(R/r_scale)) under the logarithmic radiation class.
inline ExteriorSymbol dtn_symbol(double R, int M, Radiation rad = Radiation::Bounded,
                                 double r_scale = -1) {
  if (!(R > 0)) throw NonPositiveParameter("radius must be > 0");
  if (r_scale < 0) r_scale = 2 * R;
  double s0 = 0;
  if (rad == Radiation::LogGrowth) {
    detail::check_scale(R, r_scale);
    s0 = 1 / (R * std::log(R / r_scale));
  }
  return detail::make_symbol(SymbolTag::DtN, M, [&](int k) { return k == 0 ? s0 : -std::abs(k) / R; });
}

struct LayerSymbols {
  ExteriorSymbol S, T, Rop;
};

// Boundary operators of G(x,y) = (1/2pi) log(r_scale/|x-y|) on the circle.
inline LayerSymbols layer_symbols(double R, double r_scale, int M) {
  detail::check_scale(R, r_scale);
  LayerSymbols L;
  L.S = detail::make_symbol(SymbolTag::SingleLayer, M, [&](int k) {
    return k == 0 ? R * std::log(r_scale / R) : R / (2.0 * std::abs(k));
  });
  L.T = detail::make_symbol(SymbolTag::DoubleLayerT, M, [](int k) { return k == 0 ? -1.0 : 0.0; });
  L.Rop = detail::make_symbol(SymbolTag::Hypersingular, M, [&](int k) { return std::abs(k) / (2.0 * R); });
  return L;
}

// max |S_k dtn_k + (1 - T_k)/2| over 1 <= |k| <= M (k = 0 optionally, with the
// mode-0 DtN value of the chosen radiation class).
inline double bie_dtn_crosscheck(double R, double r_scale, int M, bool include_zero = false,
                                 Radiation rad = Radiation::Bounded) {
  const auto L = layer_symbols(R, r_scale, M);
  const auto d = dtn_symbol(R, M, rad, r_scale);
  double m = 0;
  for (int k = include_zero ? 0 : 1; k <= M; ++k)
    for (int sgn : {1, -1}) m = std::max(m, std::abs(L.S.at(sgn * k) * d.at(sgn * k) + 0.5 * (1 - L.T.at(sgn * k))));
  return m;
}

inline FourierFn apply_symbol(const ExteriorSymbol& sym, const FourierFn& g) {
  FourierFn out(g.M);
  for (int k = -g.M; k <= g.M; ++k) out.at(k) = sym.at(k) * g.at(k);
  return out;
}

// sum_j c_j r^(min_power + j)
struct LaurentPolynomial {
  int min_power = 0;
  std::vector<cplx> c;

  cplx operator()(double r) const {
    cplx s = 0;
    for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * std::pow(r, min_power + int(j));
    return s;
  }
  // Laplacian of f(r) e^{ik theta} divided by e^{ik theta}.
  LaurentPolynomial radial_laplacian(int k) const {
    LaurentPolynomial out{min_power - 2, std::vector<cplx>(c.size())};
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double m = min_power + int(j);
      out.c[j] = c[j] * (m * m - double(k) * k);
    }
    return out;
  }
  friend LaurentPolynomial operator*(const LaurentPolynomial& a, const LaurentPolynomial& b) {
    if (a.c.empty() || b.c.empty()) return {};
    LaurentPolynomial out{a.min_power + b.min_power, std::vector<cplx>(a.c.size() + b.c.size() - 1, 0.0)};
    for (std::size_t i = 0; i < a.c.size(); ++i)
      for (std::size_t j = 0; j < b.c.size(); ++j) out.c[i + j] += a.c[i] * b.c[j];
    return out;
  }
};

// f(r, theta) = sum_k f_k(r) e^{ik theta} on R <= r <= R_max, zero outside.
struct RadialSource {
  double R_max = 0;
  std::map<int, LaurentPolynomial> modes;

  bool empty() const { return modes.empty(); }
  cplx operator()(double r, double theta, double R) const {
    if (r < R || r > R_max) return 0.0;
    cplx s = 0;
    for (const auto& [k, f] : modes) s += f(r) * std::exp(cplx(0, k * theta));
    return s;
  }
};

struct ExteriorOptions {
  Radiation radiation = Radiation::Bounded;
  double r_scale = -1;  // defaults to 2R
  int quadrature_nodes = 64;
};

// Mode k of v: alpha (R/r)^n + beta (r/R)^n + v_p(r) for n = |k| > 0, and
// alpha + beta log(r/R) + v_p(r) for k = 0. v_p vanishes with its slope at R.
struct ModeSolution {
  cplx alpha = 0, beta = 0;
  bool has_source = false;
};

class ExteriorField {
 public:
  ExteriorField(double R, RadialSource source, ExteriorOptions opt)
      : R_(R), src_(std::move(source)), opt_(opt), gauss_(gauss_legendre(opt.quadrature_nodes)) {
    if (opt_.r_scale < 0) opt_.r_scale = 2 * R;
    if (src_.empty()) src_.R_max = R;
    if (src_.R_max < R) throw NonPositiveParameter("source support must lie outside the disk");
  }

  double radius() const { return R_; }
  double support_radius() const { return src_.R_max; }
  const std::map<int, ModeSolution>& modes() const { return modes_; }
  int max_mode() const {
    int m = 0;
    for (const auto& [k, s] : modes_) m = std::max(m, std::abs(k));
    return m;
  }

  cplx value(int k, double r) const {
    auto it = modes_.find(k);
    if (it == modes_.end()) return 0.0;
    const auto& m = it->second;
    const int n = std::abs(k);
    cplx v = n == 0 ? m.alpha + m.beta * std::log(r / R_)
                    : m.alpha * std::pow(R_ / r, n) + m.beta * std::pow(r / R_, n);
    if (m.has_source) v += particular(k, src_.modes.at(k), r).first;
    return v;
  }
  cplx radial_derivative(int k, double r) const {
    auto it = modes_.find(k);
    if (it == modes_.end()) return 0.0;
    const auto& m = it->second;
    const int n = std::abs(k);
    cplx d = n == 0 ? m.beta / r
                    : (-double(n) / r) * m.alpha * std::pow(R_ / r, n) + (double(n) / r) * m.beta * std::pow(r / R_, n);
    if (m.has_source) d += particular(k, src_.modes.at(k), r).second;
    return d;
  }
  cplx operator()(double r, double theta) const {
    cplx s = 0;
    for (const auto& [k, m] : modes_) s += value(k, r) * std::exp(cplx(0, k * theta));
    return s;
  }

  // Boundary values v_k(R) as a Fourier function.
  FourierFn trace() const {
    FourierFn f(max_mode());
    for (const auto& [k, m] : modes_) f.at(k) = value(k, R_);
    return f;
  }

  // Fixes the homogeneous coefficients of mode k from the boundary value and
  // the radiation condition.
  void solve_mode(int k, cplx g_k) {
    ModeSolution m;
    const LaurentPolynomial* f = nullptr;
    if (auto it = src_.modes.find(k); it != src_.modes.end()) f = &it->second;
    m.has_source = f != nullptr;
    const int n = std::abs(k);
    if (n > 0) {
      // growing part outside the support must cancel: beta (r/R)^n + r^n A/(2n) = 0
      const cplx A = f ? moment(*f, 1 - n, src_.R_max) : cplx(0);
      m.beta = -std::pow(R_, n) * A / (2.0 * n);
      m.alpha = g_k - m.beta;
    } else {
      const cplx B0 = f ? moment(*f, 1, src_.R_max) : cplx(0);
      const cplx C0 = f ? log_moment(*f, src_.R_max) : cplx(0);
      m.alpha = g_k;
      if (opt_.radiation == Radiation::Bounded) {
        m.beta = -B0;
      } else {
        const double lr = std::log(R_ / opt_.r_scale);
        if (std::abs(lr) < 1e-14)
          throw UnresolvableMode0("log radiation class with scale equal to the radius");
        // far field (alpha - beta log R - C0) + (beta + B0) log r must equal gamma log(r/r_scale)
        m.beta = (g_k - C0 + B0 * std::log(opt_.r_scale)) / lr;
      }
    }
    modes_[k] = m;
  }

 private:
  // int_R^{min(r, R_max)} s^q f(s) ds
  cplx moment(const LaurentPolynomial& f, int q, double r) const {
    const double b = std::min(r, src_.R_max);
    if (b <= R_) return 0.0;
    cplx s = 0;
    for (std::size_t i = 0; i < gauss_.x.size(); ++i) {
      const double x = R_ + 0.5 * (b - R_) * (gauss_.x[i] + 1);
      s += gauss_.w[i] * std::pow(x, q) * f(x);
    }
    return 0.5 * (b - R_) * s;
  }
  // int_R^{min(r, R_max)} s log(s) f(s) ds
  cplx log_moment(const LaurentPolynomial& f, double r) const {
    const double b = std::min(r, src_.R_max);
    if (b <= R_) return 0.0;
    cplx s = 0;
    for (std::size_t i = 0; i < gauss_.x.size(); ++i) {
      const double x = R_ + 0.5 * (b - R_) * (gauss_.x[i] + 1);
      s += gauss_.w[i] * x * std::log(x) * f(x);
    }
    return 0.5 * (b - R_) * s;
  }
  // Variation of parameters started at R: value and derivative at r.
  std::pair<cplx, cplx> particular(int k, const LaurentPolynomial& f, double r) const {
    const int n = std::abs(k);
    if (n == 0) {
      const cplx B = moment(f, 1, r), C = log_moment(f, r);
      return {std::log(r) * B - C, B / r};
    }
    const cplx A = moment(f, 1 - n, r), B = moment(f, 1 + n, r);
    const double rn = std::pow(r, n);
    return {(rn * A - B / rn) / (2.0 * n), 0.5 * (rn / r) * A + 0.5 * B / (rn * r)};
  }

  double R_;
  RadialSource src_;
  ExteriorOptions opt_;
  GaussRule gauss_;
  std::map<int, ModeSolution> modes_;
};

// Exterior field with Delta v = source outside the disk and v = g on the circle.
inline ExteriorField solve_exterior_dirichlet(const FourierFn& g, const RadialSource& source, double R,
                                              const ExteriorOptions& opt = {}) {
  ExteriorField field(R, source, opt);
  for (int k = -g.M; k <= g.M; ++k)
    if (g.at(k) != 0.0 || source.modes.count(k)) field.solve_mode(k, g.at(k));
  for (const auto& [k, f] : source.modes)
    if (std::abs(k) > g.M) field.solve_mode(k, 0.0);
  return field;
}

// Outward radial derivative at r = R.
inline FourierFn gamma1_exterior(const ExteriorField& field) {
  FourierFn f(field.max_mode());
  for (const auto& [k, m] : field.modes()) f.at(k) = field.radial_derivative(k, field.radius());
  return f;
}

// Integrals of h over the cells of level N.
inline Eigen::VectorXcd pair_with_cells(const FourierFn& h, int p, int N, double R) {
  const auto P = ipow(p, N);
  const double w = two_pi / double(P);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(P);
  for (int k = -h.M; k <= h.M; ++k) {
    const cplx hk = h.at(k);
    if (hk == 0.0) continue;
    for (std::int64_t K = 0; K < P; ++K) out[K] += hk * R * w * arc_mean_exp(k, w * K, w * (K + 1));
  }
  return out;
}

// A[K][L] = 2 pi R sum_k s_k (1_L)^_k (1_K)^_{-k}. Equal arcs make the matrix
// circulant, so only the first row is summed.
inline GalerkinOperator<double> dtn_galerkin(const MultiscaleDecomposition& decomp, int N,
                                             const ExteriorSymbol& sym, int oversampling = 16,
                                             const AssemblyOptions& opt = {}) {
  const auto P = decomp.cells(N);
  check_dense_size(P, opt);
  if (sym.M < oversampling * P)
    throw CutoffTooSmall("mode cutoff " + std::to_string(sym.M) + " below " + std::to_string(oversampling) +
                         " x " + std::to_string(P));
  const double h = two_pi / double(P);
  const double R = decomp.R;
  std::vector<double> row(P, 0.0);
  for (std::int64_t d = 0; d < P; ++d) {
    double acc = sym.at(0) / double(P * P);
    for (int k = 1; k <= sym.M; ++k) {
      const double ind2 = (1 - std::cos(k * h)) / (2 * M_PI * M_PI * double(k) * k);
      acc += (sym.at(k) + sym.at(-k)) * ind2 * std::cos(k * h * double(d));
    }
    row[d] = two_pi * R * acc;
  }
  GalerkinOperator<double> op{N, decomp.p, Eigen::MatrixXd(P, P)};
  for (std::int64_t K = 0; K < P; ++K)
    for (std::int64_t L = 0; L < P; ++L) op.matrix(K, L) = row[((L - K) % P + P) % P];
  return op;
}

}  // namespace mixdim
