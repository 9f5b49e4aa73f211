#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tree_calculus.hpp"

namespace mixdim {

// Dense matrix of pairings A[K][L] = (Op 1_L, 1_K) on the cells of one level.
template <class Scalar = double>
struct GalerkinOperator {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  int level = 0;
  int p = 2;
  Mat matrix;

  Eigen::Index size() const { return matrix.rows(); }

  double symmetry_defect() const {
    const double scale = matrix.cwiseAbs().maxCoeff();
    if (scale == 0) return 0;
    return (matrix - matrix.transpose()).cwiseAbs().maxCoeff() / scale;
  }
};

struct AssemblyOptions {
  bool allow_large = false;
  static constexpr std::int64_t dense_limit = 4096;
};

inline void check_dense_size(std::int64_t cells, const AssemblyOptions& opt) {
  if (cells > AssemblyOptions::dense_limit && !opt.allow_large)
    throw TooLarge(std::to_string(cells) + " cells exceed the dense limit of " +
                   std::to_string(AssemblyOptions::dense_limit) + " (use --allow-large)");
}

// Column L: harmonic solve with unit data on leaf L; entry K: w_K times the
// slope on leaf edge K.
inline GalerkinOperator<double> assemble_tree_dtn(const TreePtr& tree, const AssemblyOptions& opt = {}) {
  const auto P = tree->num_leaves();
  check_dense_size(P, opt);
  DirichletSolver solver(tree);
  GalerkinOperator<double> op{tree->depth(), tree->p(), Eigen::MatrixXd(P, P)};
  const Eigen::Index block = 256;
  for (Eigen::Index c0 = 0; c0 < P; c0 += block) {
    const auto nb = std::min<Eigen::Index>(block, P - c0);
    Eigen::MatrixXd data = Eigen::MatrixXd::Zero(P, nb);
    for (Eigen::Index j = 0; j < nb; ++j) data(c0 + j, j) = 1.0;
    op.matrix.middleCols(c0, nb) = solver.leaf_fluxes(data);
  }
  return op;
}

// DtN of the (N+1)-condensation, a GalerkinOperator at level N+1.
inline GalerkinOperator<double> condensed_dtn(const TreeParams& params, int N,
                                              const AssemblyOptions& opt = {}) {
  return assemble_tree_dtn(build_condensed(params, N), opt);
}

inline GalerkinOperator<double> truncated_dtn(const TreeParams& params, int N,
                                              const AssemblyOptions& opt = {}) {
  return assemble_tree_dtn(build_truncated(params, N), opt);
}

// Galerkin restriction to the coarser space V_to: sums of p^(level-to) blocks.
template <class Scalar>
GalerkinOperator<Scalar> compress(const GalerkinOperator<Scalar>& op, int to) {
  if (to > op.level) throw DepthMismatch("cannot compress to a finer level");
  const auto f = ipow(op.p, op.level - to);
  const auto n = op.size() / f;
  GalerkinOperator<Scalar> out{to, op.p, typename GalerkinOperator<Scalar>::Mat(n, n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out.matrix(i, j) = op.matrix.block(i * f, j * f, f, f).sum();
  return out;
}

// Cell integrals (D g, 1_K) of the tree DtN applied to g in V_L, from one
// harmonic solve on the L-condensation (exact for L - 1 >= N1).
template <class Scalar>
std::vector<Scalar> apply_tree_dtn(const TreeParams& params, const PiecewiseConstantFn<Scalar>& g) {
  if (g.level < 1) return apply_tree_dtn(params, g.refine(1));
  auto tree = build_condensed(params, g.level - 1);
  std::vector<Scalar> data(g.values.data(), g.values.data() + g.values.size());
  auto u = DirichletSolver(tree).solve(data, Scalar(0));
  std::vector<Scalar> flux(tree->num_leaves());
  for (std::int64_t K = 0; K < tree->num_leaves(); ++K)
    flux[K] = tree->weight(tree->leaf_edge(K)) * u.end_slope(tree->leaf_edge(K));
  return flux;
}

enum class OperatorKind { TreeDtN, ExteriorDtN };

struct CoercivityReport {
  double min_eig = 0;
  double max_eig = 0;
  double symmetry_defect = 0;
  double kernel_defect = 0;  // max |A 1| relative to max |A|
  bool passed = false;
};

inline CoercivityReport coercivity_check(const GalerkinOperator<double>& op, OperatorKind kind) {
  CoercivityReport rep;
  rep.symmetry_defect = op.symmetry_defect();
  const Eigen::MatrixXd S = 0.5 * (op.matrix + op.matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  rep.min_eig = es.eigenvalues().minCoeff();
  rep.max_eig = es.eigenvalues().maxCoeff();
  const double scale = std::max(op.matrix.cwiseAbs().maxCoeff(), 1e-300);
  rep.kernel_defect = (op.matrix * Eigen::VectorXd::Ones(op.size())).cwiseAbs().maxCoeff() / scale;
  if (kind == OperatorKind::TreeDtN)
    rep.passed = rep.min_eig > 0 && rep.symmetry_defect < 1e-9;
  else
    rep.passed = rep.max_eig <= 1e-12 * scale && rep.kernel_defect <= 1e-10;
  return rep;
}

struct RateFit {
  int coarse_level = 0;
  std::vector<int> depths;
  std::vector<double> errors;
  double rate_per_generation = 0;  // -slope of log(error) against N
  double rho_hat = 0;              // rate / ln p (p >= 2)
  double residual = 0;             // rms residual of the log-linear fit
};

inline RateFit fit_log_linear(const std::vector<int>& x, const std::vector<double>& e) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y = std::log(e[i]);
    sx += x[i];
    sy += y;
    sxx += double(x[i]) * x[i];
    sxy += x[i] * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) res += std::pow(std::log(e[i]) - icpt - slope * x[i], 2);
  RateFit f;
  f.rate_per_generation = -slope;
  f.residual = std::sqrt(res / n);
  return f;
}

// Truncated DtN at depth N, restricted to a fixed coarse level m, against
// the exact restriction of the infinite-tree DtN to V_m (the m-condensation).
inline RateFit dtn_convergence_rate(const TreeParams& params, std::vector<int> depths,
                                    const AssemblyOptions& opt = {}, int coarse_level = -1) {
  std::sort(depths.begin(), depths.end());
  depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
  if (depths.size() < 3) throw InsufficientDepths("need at least three distinct depths");
  const int m = std::max({coarse_level, params.N1 + 1, 1});
  const auto exact = condensed_dtn(params, m - 1, opt);
  std::vector<int> used;
  std::vector<double> err;
  for (int N : depths) {
    if (N < m) continue;
    const auto D = compress(truncated_dtn(params, N, opt), m);
    used.push_back(N);
    err.push_back((D.matrix - exact.matrix).norm());
  }
  if (used.size() < 3) throw InsufficientDepths("fewer than three depths at or above the coarse level");
  RateFit f = fit_log_linear(used, err);
  f.coarse_level = m;
  f.depths = used;
  f.errors = err;
  f.rho_hat = params.p >= 2 ? f.rate_per_generation / std::log(double(params.p)) : f.rate_per_generation;
  return f;
}

}  // namespace mixdim
