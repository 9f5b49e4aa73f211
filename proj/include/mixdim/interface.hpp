#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "errors.hpp"
#include "tree_function.hpp"

namespace mixdim {

using cplx = std::complex<double>;
inline constexpr double two_pi = 2.0 * M_PI;

// Circle of radius R split into equal-angle p-adic arcs
// Gamma_{n,k} = [2 pi k / p^n, 2 pi (k+1) / p^n).
struct MultiscaleDecomposition {
  double R = 1.0;
  int p = 2;
  int N_max = 12;

  MultiscaleDecomposition() = default;
  MultiscaleDecomposition(double R_, int p_, int N_max_) : R(R_), p(p_), N_max(N_max_) {
    if (!(R > 0)) throw NonPositiveParameter("radius must be > 0");
    if (p < 2) throw StructuralConditionViolated("interface decomposition needs p >= 2");
  }

  std::int64_t cells(int n) const { return ipow(p, n); }
  double angle_width(int n) const { return two_pi / double(cells(n)); }
  double measure(int n) const { return two_pi * R / double(cells(n)); }
  double total_measure() const { return two_pi * R; }
  std::pair<double, double> arc(int n, std::int64_t k) const {
    const double h = angle_width(n);
    return {h * double(k), h * double(k + 1)};
  }
  double chord_diameter(int n) const {
    const double phi = angle_width(n);
    return phi >= M_PI ? 2 * R : 2 * R * std::sin(phi / 2);
  }
};

struct DecompositionReport {
  double c1 = 0;  // diam(Gamma_{n,k}) <= c1 p^{-n}
  double c2 = 0;  // |U \ (U + h)| <= c2 |h|
  bool nested = true;
  bool balanced = true;
};

// Checks nesting, equal measure, the diameter bound and the translation
// overlap bound on levels 0..levels.
inline DecompositionReport verify_decomposition(const MultiscaleDecomposition& d, int levels) {
  DecompositionReport rep;
  rep.c1 = two_pi * d.R;
  rep.c2 = 1.0;
  for (int n = 0; n <= levels; ++n) {
    const double scaled = d.chord_diameter(n) * double(d.cells(n));
    if (scaled > rep.c1 * (1 + 1e-12)) rep.nested = false;
    const double mu = d.measure(n);
    if (std::abs(mu * double(d.cells(n)) - d.total_measure()) > 1e-12 * d.total_measure())
      rep.balanced = false;
    if (n < levels) {
      for (std::int64_t k = 0; k < d.cells(n); ++k) {
        auto [a, b] = d.arc(n, k);
        auto [ca, cb0] = d.arc(n + 1, k * d.p);
        auto [cb1, cb] = d.arc(n + 1, k * d.p + d.p - 1);
        (void)cb0;
        (void)cb1;
        if (std::abs(a - ca) > 1e-14 || std::abs(b - cb) > 1e-12) rep.nested = false;
      }
    }
    // Arc of angle w shifted by angle t loses min(|t|, w) of its angle.
    for (double t : {0.1, 0.5, 1.0, 3.0}) {
      const double w = d.angle_width(n);
      const double lost = d.R * std::min(t, w);
      if (lost > rep.c2 * d.R * t + 1e-15) rep.balanced = false;
    }
  }
  return rep;
}

// Element of V_N: one value per cell at a fixed level.
template <class Scalar = double>
struct PiecewiseConstantFn {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  int level = 0;
  int p = 2;
  Vec values;

  PiecewiseConstantFn() = default;
  PiecewiseConstantFn(int p_, int level_, Vec v) : level(level_), p(p_), values(std::move(v)) {
    if (values.size() != ipow(p, level)) throw DepthMismatch("cell count does not match level");
  }
  static PiecewiseConstantFn constant(int p, int level, Scalar c) {
    return {p, level, Vec::Constant(ipow(p, level), c)};
  }
  std::int64_t size() const { return values.size(); }

  // Same function represented on a finer level.
  PiecewiseConstantFn refine(int to) const {
    if (to < level) throw DepthMismatch("refine target below current level");
    const auto f = ipow(p, to - level);
    Vec v(values.size() * f);
    for (Eigen::Index i = 0; i < values.size(); ++i) v.segment(i * f, f).setConstant(values[i]);
    return {p, to, std::move(v)};
  }
  // Cell averages on a coarser level.
  PiecewiseConstantFn coarsen(int to) const {
    if (to > level) throw DepthMismatch("coarsen target above current level");
    const auto f = ipow(p, level - to);
    Vec v(values.size() / f);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = values.segment(i * f, f).mean();
    return {p, to, std::move(v)};
  }
  double l2_norm(double R) const {
    const double mu = two_pi * R / double(values.size());
    return std::sqrt(mu * values.squaredNorm());
  }
};

// g(theta) = sum_{|k| <= M} c_k e^{i k theta}.
struct FourierFn {
  int M = 0;
  std::vector<cplx> c;

  FourierFn() : c(1, 0.0) {}
  explicit FourierFn(int M_) : M(M_), c(2 * M_ + 1, 0.0) {}

  cplx& at(int k) {
    if (std::abs(k) > M) throw std::out_of_range("mode beyond cutoff");
    return c[k + M];
  }
  cplx at(int k) const { return std::abs(k) <= M ? c[k + M] : cplx(0); }

  static FourierFn mode(int k, cplx a = 1.0, int M = -1) {
    FourierFn f(std::max(M, std::abs(k)));
    f.at(k) = a;
    return f;
  }
  // Copy with a larger (or equal) cutoff.
  FourierFn widened(int M2) const {
    FourierFn w(std::max(M, M2));
    for (int k = -M; k <= M; ++k) w.at(k) = at(k);
    return w;
  }
  static FourierFn cosine(int k, int M = -1) {
    FourierFn f(std::max(M, std::abs(k)));
    f.at(k) += 0.5;
    f.at(-k) += 0.5;
    return f;
  }

  cplx operator()(double theta) const {
    cplx s = 0;
    for (int k = -M; k <= M; ++k) s += at(k) * std::exp(cplx(0, k * theta));
    return s;
  }

  FourierFn& operator+=(const FourierFn& o) {
    if (o.M > M) *this = widened(o.M);
    for (int k = -o.M; k <= o.M; ++k) at(k) += o.at(k);
    return *this;
  }
  FourierFn& operator*=(cplx a) {
    for (auto& x : c) x *= a;
    return *this;
  }
  friend FourierFn operator+(FourierFn a, const FourierFn& b) { return a += b; }
  friend FourierFn operator-(FourierFn a, FourierFn b) { return a += (b *= -1.0); }
  friend FourierFn operator*(cplx s, FourierFn a) { return a *= s; }

  double l2_norm(double R) const {
    double s = 0;
    for (const auto& x : c) s += std::norm(x);
    return std::sqrt(two_pi * R * s);
  }
};

// (e^{ikb} - e^{ika}) / (ik(b-a)): mean of e^{ik theta} over (a, b).
inline cplx arc_mean_exp(int k, double a, double b) {
  if (k == 0) return 1.0;
  const double h = b - a;
  const double x = k * h / 2;
  const double sinc = std::abs(x) < 1e-8 ? 1 - x * x / 6 : std::sin(x) / x;
  return std::exp(cplx(0, k * (a + b) / 2)) * sinc;
}

inline FourierFn indicator_fourier(int p, int N, std::int64_t K, int M) {
  if (M < 0) throw NonPositiveParameter("mode cutoff must be >= 0");
  FourierFn f(M);
  const double h = two_pi / double(ipow(p, N));
  const double a = h * double(K), b = a + h;
  for (int k = -M; k <= M; ++k) {
    if (k == 0)
      f.at(0) = h / two_pi;
    else
      f.at(k) = (std::exp(cplx(0, -k * a)) - std::exp(cplx(0, -k * b))) / (cplx(0, two_pi * k));
  }
  return f;
}

// Fourier coefficients of a piecewise-constant function. The jump form
// c_k = (1/(2 pi i k)) sum_K J_K e^{-ik a_K} depends only on k mod P, so one
// length-P transform per residue suffices.
template <class Scalar>
FourierFn fourier_of(const PiecewiseConstantFn<Scalar>& g, int M) {
  const auto P = g.values.size();
  FourierFn f(M);
  std::vector<cplx> jump(P);
  for (Eigen::Index K = 0; K < P; ++K)
    jump[K] = cplx(g.values[K]) - cplx(g.values[(K + P - 1) % P]);
  std::vector<cplx> dft(P, 0.0), twiddle(P);
  for (Eigen::Index m = 0; m < P; ++m) twiddle[m] = std::exp(cplx(0, -two_pi * double(m) / double(P)));
  const Eigen::Index used = std::min<Eigen::Index>(P, 2 * Eigen::Index(M) + 1);
  for (Eigen::Index r = 0; r < P; ++r) {
    if (used < P) {
      // residues needed: k mod P for |k| <= M
      Eigen::Index d = std::min(r, P - r);
      if (d > M) continue;
    }
    cplx s = 0;
    for (Eigen::Index K = 0; K < P; ++K)
      if (jump[K] != 0.0) s += jump[K] * twiddle[(r * K) % P];
    dft[r] = s;
  }
  cplx mean = 0;
  for (Eigen::Index K = 0; K < P; ++K) mean += cplx(g.values[K]);
  f.at(0) = mean / double(P);
  for (int k = 1; k <= M; ++k) {
    const auto rp = k % P;
    const auto rm = (P - rp) % P;
    f.at(k) = dft[rp] / cplx(0, two_pi * k);
    f.at(-k) = dft[rm] / cplx(0, -two_pi * k);
  }
  return f;
}

// Cell averages (orthogonal projection onto V_N).
inline PiecewiseConstantFn<cplx> project_PN(const FourierFn& g, int p, int N) {
  const auto P = ipow(p, N);
  const double h = two_pi / double(P);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(P);
  for (int k = -g.M; k <= g.M; ++k) {
    const cplx gk = g.at(k);
    if (gk == 0.0) continue;
    for (std::int64_t K = 0; K < P; ++K) v[K] += gk * arc_mean_exp(k, h * K, h * (K + 1));
  }
  return {p, N, std::move(v)};
}

template <class Scalar>
PiecewiseConstantFn<Scalar> project_PN(const PiecewiseConstantFn<Scalar>& g, int N) {
  return N >= g.level ? g.refine(N) : g.coarsen(N);
}

inline PiecewiseConstantFn<double> real_part(const PiecewiseConstantFn<cplx>& g) {
  return {g.p, g.level, g.values.real()};
}

// ||P0 g||^2 + sum_{n<level} p^{2nr} ||g - P_n g||^2, exact for g in V_level.
template <class Scalar>
double ar_norm(const PiecewiseConstantFn<Scalar>& g, double r, double R) {
  if (!(r > 0 && r < 0.5)) throw ExponentOrderViolated("A^r norm needs 0 < r < 1/2");
  const double p0 = g.coarsen(0).l2_norm(R);
  double s = p0 * p0;
  for (int n = 0; n < g.level; ++n) {
    PiecewiseConstantFn<Scalar> d = g;
    d.values -= g.coarsen(n).refine(g.level).values;
    const double e = d.l2_norm(R);
    s += std::pow(double(g.p), 2.0 * n * r) * e * e;
  }
  return std::sqrt(s);
}

namespace detail {

// 1 - sinc(x)^2 without cancellation for small x.
inline double one_minus_sinc2(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return x2 / 3.0 - 2.0 * x2 * x2 / 45.0;
  }
  const double s = std::sin(x) / x;
  return 1 - s * s;
}

}  // namespace detail

// ||g - P_n g||^2_{L2} for a trigonometric polynomial. Modes are grouped by
// residue mod p^n; within a class the projection keeps |sum c_k m_k|^2 with
// m_k the arc mean of e^{ik theta} at angle 0.
inline double projection_error_sq(const FourierFn& g, int p, int n, double R) {
  const double P = std::pow(double(p), n);
  const double h = two_pi / P;
  double s = 0;
  // modes k and k' share a class iff k - k' is a multiple of P
  std::map<long long, std::vector<int>> classes;
  for (int k = -g.M; k <= g.M; ++k) {
    if (g.at(k) == 0.0) continue;
    const long long key = P > 4.0 * g.M + 4 ? k : ((long long)k % (long long)P + (long long)P) % (long long)P;
    classes[key].push_back(k);
  }
  for (const auto& [key, ks] : classes) {
    (void)key;
    for (int k : ks) s += std::norm(g.at(k)) * detail::one_minus_sinc2(k * h / 2);
    if (ks.size() < 2) continue;
    // cross terms of |sum_k c_k m_k|^2, m_k = mean of e^{ik theta} over [0, h)
    std::vector<cplx> x;
    for (int k : ks) x.push_back(g.at(k) * arc_mean_exp(k, 0, h));
    if (x.size() <= 8) {
      for (std::size_t a = 0; a < x.size(); ++a)
        for (std::size_t b = 0; b < x.size(); ++b)
          if (a != b) s -= std::real(x[a] * std::conj(x[b]));
    } else {
      cplx sum = 0;
      double sq = 0;
      for (const auto& v : x) {
        sum += v;
        sq += std::norm(v);
      }
      s -= std::norm(sum) - sq;
    }
  }
  return two_pi * R * std::max(s, 0.0);
}

struct ArNorm {
  double value = 0;
  double tail = 0;  // geometric estimate of the omitted levels (added in quadrature)
};

inline ArNorm ar_norm(const FourierFn& g, double r, int p, double R, int n_max = 40) {
  if (!(r > 0 && r < 0.5)) throw ExponentOrderViolated("A^r norm needs 0 < r < 1/2");
  double s = std::norm(g.at(0)) * two_pi * R;
  double last = 0;
  for (int n = 0; n <= n_max; ++n) {
    last = std::pow(double(p), 2.0 * n * r) * projection_error_sq(g, p, n, R);
    s += last;
  }
  const double q = std::pow(double(p), 2 * r - 2);
  return {std::sqrt(s), std::sqrt(s + last * q / (1 - q)) - std::sqrt(s)};
}

struct ProjectorErrorCheck {
  double lhs = 0;
  double rhs = 0;
  double constant = 0;
  bool holds() const { return lhs <= rhs; }
};

// ||P_N g - g||_{A^sigma} against p^{2s}/(p^{2s}-1) p^{-N(s'-s)} ||g||_{A^{s'}}.
inline ProjectorErrorCheck projector_error_check(const FourierFn& g, int p, double R, int N,
                                                 double sigma, double sigma_prime,
                                                 int n_max = 40) {
  if (!(0 < sigma && sigma < sigma_prime && sigma_prime < 0.5))
    throw ExponentOrderViolated("need 0 < sigma < sigma' < 1/2");
  const double eN = projection_error_sq(g, p, N, R);
  double s = 0;
  for (int n = 0; n <= N; ++n) s += std::pow(double(p), 2.0 * n * sigma) * eN;
  for (int n = N + 1; n <= n_max; ++n)
    s += std::pow(double(p), 2.0 * n * sigma) * projection_error_sq(g, p, n, R);
  ProjectorErrorCheck out;
  out.lhs = std::sqrt(s);
  const double q = std::pow(double(p), 2 * sigma);
  out.constant = q / (q - 1);
  out.rhs = out.constant * std::pow(double(p), -N * (sigma_prime - sigma)) *
            ar_norm(g, sigma_prime, p, R, n_max).value;
  return out;
}

// (2 pi R sum (1+k^2)^s |c_k|^2)^{1/2}
inline double sobolev_norm_fourier(const FourierFn& g, double s, double R) {
  if (std::abs(s) > 1) throw ExponentOrderViolated("|s| must be <= 1");
  double acc = 0;
  for (int k = -g.M; k <= g.M; ++k) acc += std::pow(1.0 + double(k) * k, s) * std::norm(g.at(k));
  return std::sqrt(two_pi * R * acc);
}

// Piecewise linear function with vertex values equal to cell averages of g
// at the matching level and value 0 at the root.
template <class Scalar>
TreeFunction<Scalar> lift_to_tree(const PiecewiseConstantFn<Scalar>& g, TreePtr tree) {
  const int N = tree->depth();
  if (g.level < N) throw DepthMismatch("data level below tree depth");
  if (g.p != tree->p()) throw DepthMismatch("branching number mismatch");
  TreeFunction<Scalar> v(tree);
  std::vector<PiecewiseConstantFn<Scalar>> levels;
  for (int n = 0; n <= N; ++n) levels.push_back(g.coarsen(n));
  for (std::int64_t i = 0; i < tree->num_edges(); ++i) {
    const auto e = tree->ref(i);
    const Scalar end = levels[e.n].values[e.k];
    const Scalar start = e.n == 0 ? Scalar(0) : levels[e.n - 1].values[e.k / g.p];
    v.edge(i) = Polynomial<Scalar>({start, (end - start) / tree->length(i)});
  }
  return v;
}

inline TreeFunction<cplx> lift_to_tree(const FourierFn& g, TreePtr tree) {
  return lift_to_tree(project_PN(g, tree->p(), tree->depth()), tree);
}

}  // namespace mixdim
