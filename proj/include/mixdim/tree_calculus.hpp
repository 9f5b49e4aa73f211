#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "interface.hpp"
#include "tree_function.hpp"

namespace mixdim {

// sum_e w_e int_0^{l_e} f conj(g) ds
template <class S>
S l2_inner(const TreeFunction<S>& f, const TreeFunction<S>& g) {
  S acc(0);
  const auto& t = f.tree();
  for (std::int64_t i = 0; i < t.num_edges(); ++i)
    acc += t.weight(i) * (f.edge(i) * g.edge(i).conj()).integral(0, t.length(i));
  return acc;
}

template <class S>
S h1_inner(const TreeFunction<S>& f, const TreeFunction<S>& g) {
  S acc(0);
  const auto& t = f.tree();
  for (std::int64_t i = 0; i < t.num_edges(); ++i)
    acc += t.weight(i) *
           (f.edge(i).derivative() * g.edge(i).derivative().conj()).integral(0, t.length(i));
  return acc;
}

template <class S>
double l2_norm(const TreeFunction<S>& f) {
  return std::sqrt(std::abs(l2_inner(f, f)));
}
template <class S>
double h1_seminorm(const TreeFunction<S>& f) {
  return std::sqrt(std::abs(h1_inner(f, f)));
}

template <class S>
struct LaplacianResult {
  TreeFunction<S> lap;
  // Indexed by edge; entry i is the residual at the far vertex of edge i
  // (zero for leaf edges).
  std::vector<S> residual;

  double max_residual() const {
    double m = 0;
    for (const auto& r : residual) m = std::max(m, double(std::abs(r)));
    return m;
  }
};

// Edgewise second derivative plus the weighted slope balance at every
// interior vertex: rho = w_e f_e'(end) - sum_children w_c f_c'(start).
template <class S>
LaplacianResult<S> laplacian(const TreeFunction<S>& f) {
  const auto& t = f.tree();
  LaplacianResult<S> out{TreeFunction<S>(f.tree_ptr()), std::vector<S>(f.num_edges(), S(0))};
  for (std::int64_t i = 0; i < t.num_edges(); ++i) {
    out.lap.edge(i) = f.edge(i).derivative().derivative();
    if (t.is_leaf(i)) continue;
    S rho = t.weight(i) * f.end_slope(i);
    const auto c0 = t.first_child(i);
    for (int j = 0; j < t.p(); ++j) rho -= t.weight(c0 + j) * f.start_slope(c0 + j);
    out.residual[i] = rho;
  }
  return out;
}

// Factorized weighted graph Laplacian of a finite tree with root and leaves
// clamped; unknowns are the far vertices of non-leaf edges.
class DirichletSolver {
 public:
  explicit DirichletSolver(TreePtr tree) : tree_(std::move(tree)) {
    const auto& t = *tree_;
    n_ = t.offset(t.depth());
    if (n_ == 0) return;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n_ * (2 + t.p()));
    for (std::int64_t i = 0; i < n_; ++i) {
      double diag = kappa(i);
      if (i != 0) trip.emplace_back(i, t.parent(i), -kappa(i));
      const auto c0 = t.first_child(i);
      for (int j = 0; j < t.p(); ++j) {
        const auto c = c0 + j;
        diag += kappa(c);
        if (!t.is_leaf(c)) trip.emplace_back(i, c, -kappa(c));
      }
      trip.emplace_back(i, i, diag);
    }
    Eigen::SparseMatrix<double> A(n_, n_);
    A.setFromTriplets(trip.begin(), trip.end());
    ldlt_.compute(A);
    if (ldlt_.info() != Eigen::Success) throw SingularSystem("clamped tree Laplacian factorization failed");
  }

  const TreePtr& tree() const { return tree_; }
  std::int64_t unknowns() const { return n_; }

  // Leaf fluxes w_K u_K'(end) of the harmonic solutions with root 0 and leaf
  // data given column by column (one column per data set).
  Eigen::MatrixXd leaf_fluxes(const Eigen::MatrixXd& leaf_data) const {
    const auto& t = *tree_;
    const auto P = t.num_leaves();
    const auto leaf0 = t.offset(t.depth());
    if (leaf_data.rows() != P) throw DepthMismatch("leaf data rows do not match the tree");
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n_, leaf_data.cols());
    for (std::int64_t K = 0; K < P; ++K) {
      const auto i = leaf0 + K;
      if (n_ > 0) b.row(t.parent(i)) += kappa(i) * leaf_data.row(K);
    }
    Eigen::MatrixXd x = n_ > 0 ? Eigen::MatrixXd(ldlt_.solve(b)) : b;
    Eigen::MatrixXd out(P, leaf_data.cols());
    for (std::int64_t K = 0; K < P; ++K) {
      const auto i = leaf0 + K;
      if (n_ > 0)
        out.row(K) = kappa(i) * (leaf_data.row(K) - x.row(t.parent(i)));
      else
        out.row(K) = kappa(i) * leaf_data.row(K);
    }
    return out;
  }

  // Solves Delta u = source on every edge, Kirchhoff at interior vertices,
  // u(o) = root_value and u = leaf_values at the leaves.
  template <class S>
  TreeFunction<S> solve(const std::vector<S>& leaf_values, S root_value,
                        const TreeFunction<S>* source = nullptr) const {
    const auto& t = *tree_;
    if (static_cast<std::int64_t>(leaf_values.size()) != t.num_leaves())
      throw DepthMismatch("leaf data length does not match the tree");
    const auto E = t.num_edges();
    // particular parts q_e with q(0) = q'(0) = 0
    std::vector<Polynomial<S>> q(E);
    if (source)
      for (std::int64_t i = 0; i < E; ++i) q[i] = source->edge(i).antiderivative().antiderivative();
    auto qv = [&](std::int64_t i) { return q[i](t.length(i)); };
    auto qd = [&](std::int64_t i) { return q[i].derivative()(t.length(i)); };
    const auto leaf0 = t.offset(t.depth());

    Eigen::Matrix<S, Eigen::Dynamic, 1> b(n_);
    for (std::int64_t i = 0; i < n_; ++i) {
      S rhs = -t.weight(i) * qd(i) + kappa(i) * qv(i);
      if (i == 0) rhs += kappa(0) * root_value;
      const auto c0 = t.first_child(i);
      for (int j = 0; j < t.p(); ++j) {
        const auto c = c0 + j;
        rhs -= kappa(c) * qv(c);
        if (t.is_leaf(c)) rhs += kappa(c) * leaf_values[c - leaf0];
      }
      b[i] = rhs;
    }
    Eigen::Matrix<S, Eigen::Dynamic, 1> x = solve_vec(b);

    TreeFunction<S> u(tree_);
    for (std::int64_t i = 0; i < E; ++i) {
      const S xs = i == 0 ? root_value : x[t.parent(i)];
      const S xe = t.is_leaf(i) ? leaf_values[i - leaf0] : x[i];
      const double l = t.length(i);
      u.edge(i) = q[i] + Polynomial<S>({xs, (xe - xs - qv(i)) / l});
    }
    return u;
  }

 private:
  double kappa(std::int64_t i) const { return tree_->weight(i) / tree_->length(i); }

  template <class S>
  Eigen::Matrix<S, Eigen::Dynamic, 1> solve_vec(const Eigen::Matrix<S, Eigen::Dynamic, 1>& b) const {
    if (n_ == 0) return b;
    if constexpr (std::is_same_v<S, double>) {
      return ldlt_.solve(b);
    } else {
      Eigen::VectorXd re = ldlt_.solve(Eigen::VectorXd(b.real()));
      Eigen::VectorXd im = ldlt_.solve(Eigen::VectorXd(b.imag()));
      Eigen::Matrix<S, Eigen::Dynamic, 1> x(b.size());
      x.real() = re;
      x.imag() = im;
      return x;
    }
  }

  TreePtr tree_;
  std::int64_t n_ = 0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

template <class S>
TreeFunction<S> solve_harmonic_dirichlet(TreePtr tree, const std::vector<S>& leaf_values,
                                         S root_value) {
  return DirichletSolver(std::move(tree)).solve(leaf_values, root_value);
}

template <class S>
TreeFunction<S> solve_poisson_zero_trace(TreePtr tree, const TreeFunction<S>& source) {
  std::vector<S> zeros(tree->num_leaves(), S(0));
  return DirichletSolver(std::move(tree)).solve(zeros, S(0), &source);
}

// Leaf values as a cell function at the tree's depth.
template <class S>
PiecewiseConstantFn<S> gamma0_N(const TreeFunction<S>& f, std::optional<int> level = {}) {
  const auto& t = f.tree();
  if (level && *level != t.depth())
    throw DepthMismatch("requested level " + std::to_string(*level) + " but tree depth is " +
                        std::to_string(t.depth()));
  typename PiecewiseConstantFn<S>::Vec v(t.num_leaves());
  for (std::int64_t K = 0; K < t.num_leaves(); ++K) v[K] = f.leaf_value(K);
  return {t.p(), t.depth(), std::move(v)};
}

// Conormal derivative on a finite tree. flux[K] = w_K u_K'(end) is the
// integral of the density over cell K; the density is flux / cell_measure.
template <class S>
struct LeafDensity {
  int level = 0;
  int p = 2;
  double cell_measure = 1;
  std::vector<S> flux;

  S density(std::int64_t K) const { return flux[K] / cell_measure; }
  PiecewiseConstantFn<S> as_cells() const {
    typename PiecewiseConstantFn<S>::Vec v(flux.size());
    for (std::size_t K = 0; K < flux.size(); ++K) v[K] = flux[K] / cell_measure;
    return {p, level, std::move(v)};
  }
  // Integrals of the density over the cells of a coarser level.
  std::vector<S> cell_integrals(int to) const {
    const auto f = ipow(p, level - to);
    std::vector<S> out(flux.size() / f, S(0));
    for (std::size_t K = 0; K < flux.size(); ++K) out[K / f] += flux[K];
    return out;
  }
};

template <class S>
LeafDensity<S> gamma1_N(const TreeFunction<S>& u, double R, double tol = 1e-9) {
  const auto& t = u.tree();
  const auto L = laplacian(u);
  double scale = 0;
  for (std::int64_t i = 0; i < t.num_edges(); ++i)
    scale = std::max({scale, std::abs(t.weight(i) * u.end_slope(i)),
                      std::abs(t.weight(i) * u.start_slope(i))});
  if (L.max_residual() > tol * std::max(scale, 1e-300) && L.max_residual() > 1e-300)
    throw KirchhoffViolated("interior Kirchhoff residual " + std::to_string(L.max_residual()));
  LeafDensity<S> d;
  d.level = t.depth();
  d.p = t.p();
  d.cell_measure = two_pi * R / double(t.num_leaves());
  d.flux.resize(t.num_leaves());
  for (std::int64_t K = 0; K < t.num_leaves(); ++K) {
    const auto i = t.leaf_edge(K);
    d.flux[K] = t.weight(i) * u.end_slope(i);
  }
  return d;
}

// Non-conjugated edge integrals, used by the duality pairing.
template <class S>
S bilinear_l2(const TreeFunction<S>& f, const TreeFunction<S>& g) {
  S acc(0);
  const auto& t = f.tree();
  for (std::int64_t i = 0; i < t.num_edges(); ++i)
    acc += t.weight(i) * (f.edge(i) * g.edge(i)).integral(0, t.length(i));
  return acc;
}
template <class S>
S bilinear_h1(const TreeFunction<S>& f, const TreeFunction<S>& g) {
  S acc(0);
  const auto& t = f.tree();
  for (std::int64_t i = 0; i < t.num_edges(); ++i)
    acc += t.weight(i) *
           (f.edge(i).derivative() * g.edge(i).derivative()).integral(0, t.length(i));
  return acc;
}

template <class S>
struct GreenIdentity {
  S pairing;  // sum_K flux_K v(X_K)
  S volume;   // int (Delta u) v + int u' v'
  double defect;
};

template <class S>
GreenIdentity<S> green_identity_check(const TreeFunction<S>& u, const TreeFunction<S>& v) {
  if (std::abs(v.root_value()) > 1e-12 * std::max(1.0, v.max_abs_coeff()))
    throw DepthMismatch("test function must vanish at the root");
  const auto& t = u.tree();
  const auto L = laplacian(u);
  S pairing(0);
  for (std::int64_t K = 0; K < t.num_leaves(); ++K) {
    const auto i = t.leaf_edge(K);
    pairing += t.weight(i) * u.end_slope(i) * v.leaf_value(K);
  }
  const S volume = bilinear_l2(L.lap, v) + bilinear_h1(u, v);
  return {pairing, volume, double(std::abs(pairing - volume))};
}

struct RadialHarmonic {
  TreeFunction<double> u;
  double flux;  // total flux w u' through any generation
  double cell_flux(std::int64_t leaves) const { return flux / double(leaves); }
};

// Closed-form radial harmonic extension on a geometric tree, root value 0,
// leaf value b. On a condensed tree it coincides with the infinite-tree
// solution restricted to the finite section.
inline RadialHarmonic radial_harmonic(TreePtr tree, double b) {
  const auto& t = *tree;
  const auto& P = t.params();
  if (!P.is_geometric()) throw NotGeometric("radial closed form needs a geometric tree");
  const double r = P.r();
  const int N = t.depth();
  // Increment over generation n is A r^n; condensation stretches the last one by 1/(1-r).
  double total = 0;
  std::vector<double> inc(N + 1);
  for (int n = 0; n <= N; ++n) {
    inc[n] = std::pow(r, n);
    if (n == N && t.kind() == TreeKind::Condensed) inc[n] /= 1 - r;
    total += inc[n];
  }
  const double A = b / total;
  std::vector<double> vertex(N + 2, 0.0);
  for (int n = 0; n <= N; ++n) vertex[n + 1] = vertex[n] + A * inc[n];
  vertex[N + 1] = b;
  TreeFunction<double> u(tree);
  for (std::int64_t i = 0; i < t.num_edges(); ++i) {
    const int n = t.generation(i);
    u.edge(i) = Polynomial<double>({vertex[n], (vertex[n + 1] - vertex[n]) / t.length(i)});
  }
  // A = F L0 / omega0
  return {std::move(u), A * P.omega0 / P.L0};
}

struct PoincareResult {
  double a;   // smallest eigenvalue of the stiffness/mass pencil
  double C0;  // 1 / sqrt(a)
};

// Lowest eigenvalue of -(w u')' = a w u on the tree, u(o) = 0, natural
// conditions at the leaves; hierarchical cubic elements per edge.
inline PoincareResult poincare_constant(TreePtr tree) {
  const auto& t = *tree;
  const auto E = t.num_edges();
  // reference basis on [0,1]: 1-x, x, x(1-x), x(1-x)(2x-1)
  auto phi = [](int j, double x) {
    switch (j) {
      case 0: return 1 - x;
      case 1: return x;
      case 2: return x * (1 - x);
      default: return x * (1 - x) * (2 * x - 1);
    }
  };
  auto dphi = [](int j, double x) {
    switch (j) {
      case 0: return -1.0;
      case 1: return 1.0;
      case 2: return 1 - 2 * x;
      default: return -6 * x * x + 6 * x - 1;
    }
  };
  const auto g = gauss_legendre(6);
  Eigen::Matrix4d K0 = Eigen::Matrix4d::Zero(), M0 = Eigen::Matrix4d::Zero();
  for (std::size_t q = 0; q < g.x.size(); ++q) {
    const double x = 0.5 * (g.x[q] + 1), w = 0.5 * g.w[q];
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        K0(a, b) += w * dphi(a, x) * dphi(b, x);
        M0(a, b) += w * phi(a, x) * phi(b, x);
      }
  }
  // dofs: vertex at far end of edge i -> i; bubbles -> E + 2i, E + 2i + 1
  const auto n = 3 * E;
  std::vector<Eigen::Triplet<double>> kt, mt;
  for (std::int64_t i = 0; i < E; ++i) {
    const double l = t.length(i), w = t.weight(i);
    const std::int64_t dof[4] = {i == 0 ? -1 : t.parent(i), i, E + 2 * i, E + 2 * i + 1};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        if (dof[a] < 0 || dof[b] < 0) continue;
        kt.emplace_back(dof[a], dof[b], w / l * K0(a, b));
        mt.emplace_back(dof[a], dof[b], w * l * M0(a, b));
      }
  }
  Eigen::SparseMatrix<double> K(n, n), M(n, n);
  K.setFromTriplets(kt.begin(), kt.end());
  M.setFromTriplets(mt.begin(), mt.end());
  double a;
  if (n <= 900) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(K), Eigen::MatrixXd(M),
                                                                  Eigen::EigenvaluesOnly);
    a = es.eigenvalues().minCoeff();
  } else {
    // inverse iteration, converges to the lowest mode
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("stiffness factorization failed");
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    a = 0;
    for (int it = 0; it < 5000; ++it) {
      Eigen::VectorXd y = ldlt.solve(M * x);
      y /= std::sqrt(y.dot(M * y));
      const double an = y.dot(K * y);
      x = y;
      if (it > 0 && std::abs(an - a) <= 1e-14 * an) {
        a = an;
        break;
      }
      a = an;
    }
  }
  return {a, 1 / std::sqrt(a)};
}

}  // namespace mixdim
