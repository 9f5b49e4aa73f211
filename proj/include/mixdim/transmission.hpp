#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "exterior.hpp"
#include "tree_dtn.hpp"

namespace mixdim {

// f_T as an edgewise polynomial in x = s / l, identical on every edge up to
// max_generation (all generations when negative). Empty coefficients: f_T = 0.
struct TreeSourceSpec {
  std::vector<cplx> coeffs;
  int max_generation = -1;

  bool empty() const {
    return std::all_of(coeffs.begin(), coeffs.end(), [](cplx c) { return c == 0.0; });
  }
};

struct TransmissionConfig {
  TreeParams tree;
  double radius = 1;
  int level = 3;          // N
  int source_depth = -1;  // N_src, N + 4 when negative
  int chart_level = 0;
  int oversampling = 16;
  cplx alpha1 = 1.0;
  std::vector<cplx> alpha0 = {0.0};  // one value, or one per cell at the solve level
  cplx c_root = 0.0;
  TreeSourceSpec tree_source;
  RadialSource exterior_source;
  AssemblyOptions assembly;

  int n_src() const { return std::max({source_depth < 0 ? level + 4 : source_depth, level, tree.N1 + 1}); }
  int mode_cutoff() const { return oversampling * int(ipow(tree.p, level)); }
  cplx alpha0_at(std::int64_t K) const { return alpha0.size() == 1 ? alpha0[0] : alpha0[K]; }
};

struct SolvabilityFlags {
  bool case_i = false;   // real parts
  bool case_ii = false;  // imaginary parts
  bool any() const { return case_i || case_ii; }
};

inline SolvabilityFlags solvability_flags(const TransmissionConfig& cfg) {
  auto check = [&](auto part) {
    if (part(cfg.alpha1) < 0) return false;
    for (const auto& a : cfg.alpha0)
      if (part(a) < 0 || part(cfg.alpha1) + part(a) <= 0) return false;
    return true;
  };
  return {check([](cplx z) { return z.real(); }), check([](cplx z) { return z.imag(); })};
}

struct InterfaceSystem {
  int level = 0;
  int p = 2;
  double R = 1;
  cplx alpha1 = 1.0;
  Eigen::MatrixXd C;   // exterior DtN Galerkin
  Eigen::MatrixXd D;   // tree DtN on V_N
  Eigen::VectorXcd A0; // diagonal alpha0_K |Gamma_K|
  Eigen::VectorXcd h;  // cell integrals of h
  SolvabilityFlags flags;

  Eigen::MatrixXcd M() const {
    Eigen::MatrixXcd m = -C.cast<cplx>() + alpha1 * D.cast<cplx>();
    m.diagonal() += A0;
    return m;
  }
  double cell_measure() const { return two_pi * R / double(C.rows()); }
};

namespace detail {

inline void check_config(const TransmissionConfig& cfg) {
  require_valid(cfg.tree);
  if (!(cfg.radius > 0)) throw NonPositiveParameter("radius must be positive");
  if (cfg.alpha1 == 0.0) throw Alpha1Zero("alpha1 must be nonzero");
  if (cfg.level < std::max(cfg.chart_level, cfg.tree.N1))
    throw DepthBelowChartLevel("level " + std::to_string(cfg.level) + " below max(chart level, N1) = " +
                               std::to_string(std::max(cfg.chart_level, cfg.tree.N1)));
  if (cfg.alpha0.size() != 1 && std::int64_t(cfg.alpha0.size()) != ipow(cfg.tree.p, cfg.level))
    throw DepthMismatch("alpha0 needs one value or one per cell");
}

// Condensed tree of depth N_src carrying f_T - c Delta u1.
inline TreeFunction<cplx> tree_rhs_source(const TransmissionConfig& cfg, const TreePtr& tree) {
  TreeFunction<cplx> src(tree);
  if (!cfg.tree_source.empty()) {
    const int g = cfg.tree_source.max_generation < 0 ? tree->depth() : cfg.tree_source.max_generation;
    src = from_normalized(tree, cfg.tree_source.coeffs, g);
  }
  if (cfg.c_root != 0.0) src -= cfg.c_root * laplacian(root_bump<cplx>(tree)).lap;
  return src;
}

}  // namespace detail

// Particular tree part u_f: Delta u_f = f_T - c Delta u1, zero trace, u_f(o) = 0.
inline TreeFunction<cplx> tree_particular(const TransmissionConfig& cfg) {
  auto tree = build_condensed(cfg.tree, cfg.n_src() - 1);
  return solve_poisson_zero_trace(tree, detail::tree_rhs_source(cfg, tree));
}

// Exterior particular part v_f: Delta v_f = f_Omega, v_f = 0 on the circle.
inline ExteriorField exterior_particular(const TransmissionConfig& cfg) {
  return solve_exterior_dirichlet(FourierFn(), cfg.exterior_source, cfg.radius);
}

inline GalerkinOperator<double> tree_operator(const TreeParams& params, int N, const AssemblyOptions& opt = {}) {
  return compress(condensed_dtn(params, std::max(N - 1, params.N1), opt), N);
}

inline GalerkinOperator<double> exterior_operator(double R, int p, int N, int oversampling,
                                                  const AssemblyOptions& opt = {}) {
  MultiscaleDecomposition decomp(R, p, std::max(N, 1));
  return dtn_galerkin(decomp, N, dtn_symbol(R, oversampling * int(ipow(p, N))), oversampling, opt);
}

// Matrices without the right-hand side.
inline InterfaceSystem assemble_operators(const TransmissionConfig& cfg) {
  detail::check_config(cfg);
  InterfaceSystem sys;
  sys.level = cfg.level;
  sys.p = cfg.tree.p;
  sys.R = cfg.radius;
  sys.alpha1 = cfg.alpha1;
  sys.flags = solvability_flags(cfg);
  sys.C = exterior_operator(cfg.radius, sys.p, cfg.level, cfg.oversampling, cfg.assembly).matrix;
  sys.D = tree_operator(cfg.tree, cfg.level, cfg.assembly).matrix;
  const auto P = sys.C.rows();
  sys.A0.resize(P);
  for (Eigen::Index K = 0; K < P; ++K) sys.A0[K] = cfg.alpha0_at(K) * sys.cell_measure();
  sys.h = Eigen::VectorXcd::Zero(P);
  return sys;
}

// h = -gamma1 v_f + alpha1 gamma1 (c u1 + u_f), tested with the cells of level N.
inline InterfaceSystem assemble_system(const TransmissionConfig& cfg) {
  auto sys = assemble_operators(cfg);
  if (!cfg.exterior_source.empty()) {
    auto vf = exterior_particular(cfg);
    sys.h -= pair_with_cells(gamma1_exterior(vf), sys.p, sys.level, sys.R);
  }
  if (!cfg.tree_source.empty() || cfg.c_root != 0.0) {
    auto flux = gamma1_N(tree_particular(cfg), sys.R).cell_integrals(sys.level);
    for (Eigen::Index K = 0; K < sys.h.size(); ++K) sys.h[K] += cfg.alpha1 * flux[K];
  }
  return sys;
}

struct PencilResult {
  std::vector<cplx> values;  // descending real part
  Eigen::MatrixXcd vectors;  // column j belongs to values[j]
};

// C g = alpha D g through the nonsymmetric eigenproblem of D^{-1} C.
inline PencilResult plasmonic_pencil(const Eigen::MatrixXd& C, const Eigen::MatrixXd& D, int count = -1) {
  Eigen::LLT<Eigen::MatrixXd> llt(D);
  if (llt.info() != Eigen::Success) throw SingularSystem("tree DtN matrix is not positive definite");
  Eigen::EigenSolver<Eigen::MatrixXd> es(llt.solve(C));
  if (es.info() != Eigen::Success) throw SingularSystem("pencil eigensolve failed");
  std::vector<Eigen::Index> idx(C.rows());
  for (Eigen::Index i = 0; i < C.rows(); ++i) idx[i] = i;
  const auto& ev = es.eigenvalues();
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return ev[a].real() > ev[b].real(); });
  const Eigen::Index n = count < 0 ? C.rows() : std::min<Eigen::Index>(count, C.rows());
  PencilResult out;
  out.vectors.resize(C.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values.push_back(ev[idx[j]]);
    out.vectors.col(j) = es.eigenvectors().col(idx[j]).normalized();
  }
  return out;
}

struct InterfaceSolve {
  PiecewiseConstantFn<cplx> g;
  double rcond = 0;
  double residual = 0;  // ||M g + h|| / ||h|| (absolute when h = 0)
};

inline InterfaceSolve solve_interface(const InterfaceSystem& sys) {
  const Eigen::MatrixXcd M = sys.M();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  const double rc = lu.rcond();
  if (!(rc >= 1e-12)) {
    std::ostringstream msg;
    msg << "interface operator singular (rcond " << rc << ")";
    if (sys.A0.cwiseAbs().maxCoeff() == 0) {
      auto pen = plasmonic_pencil(sys.C, sys.D);
      auto best = *std::min_element(pen.values.begin(), pen.values.end(), [&](cplx a, cplx b) {
        return std::abs(a - sys.alpha1) < std::abs(b - sys.alpha1);
      });
      msg << "; nearest pencil eigenvalue " << best.real() << (best.imag() < 0 ? "" : "+") << best.imag() << "i";
    }
    throw SingularInterfaceOperator(msg.str());
  }
  Eigen::VectorXcd g = lu.solve(-sys.h);
  // one step of refinement
  g += lu.solve(-sys.h - M * g);
  InterfaceSolve out{{sys.p, sys.level, g}, rc, 0};
  const double hn = sys.h.norm();
  out.residual = (M * g + sys.h).norm() / (hn > 0 ? hn : 1.0);
  return out;
}

struct TransmissionSolution {
  PiecewiseConstantFn<cplx> g;
  TreeFunction<cplx> u_tree;  // u + c u1 + u_f on the condensed tree of depth N_src
  ExteriorField u_exterior;   // v + v_f
  double trace_defect_tree = 0;
  double trace_defect_exterior = 0;
  double flux_residual = 0;   // max over cells of the tested flux condition
  double rcond = 0;
};

inline TransmissionSolution reconstruct(const TransmissionConfig& cfg, const InterfaceSolve& sol) {
  const auto& g = sol.g;
  const int N = g.level, p = g.p, Ns = cfg.n_src();
  const double R = cfg.radius;
  auto tree = build_condensed(cfg.tree, Ns - 1);
  auto fine = g.refine(Ns);
  std::vector<cplx> data(fine.values.data(), fine.values.data() + fine.values.size());
  auto u = DirichletSolver(tree).solve(data, cplx(0));
  auto uf = tree_particular(cfg);
  auto uT = u + cfg.c_root * root_bump<cplx>(tree) + uf;

  const auto gf = fourier_of(g, cfg.mode_cutoff());
  ExteriorField field = solve_exterior_dirichlet(gf, cfg.exterior_source, R);

  TransmissionSolution out{g, uT, field};
  out.rcond = sol.rcond;
  out.trace_defect_tree = (gamma0_N(uT).coarsen(N).values - g.values).cwiseAbs().maxCoeff();
  const auto tr = field.trace();
  double d = 0;
  for (int k = -gf.M; k <= gf.M; ++k) d = std::max(d, std::abs(tr.at(k) - gf.at(k)));
  out.trace_defect_exterior = d;

  const auto ext = pair_with_cells(gamma1_exterior(field), p, N, R);
  const auto tre = gamma1_N(uT, R).cell_integrals(N);
  const double mu = two_pi * R / double(g.size());
  double res = 0;
  for (std::int64_t K = 0; K < g.size(); ++K)
    res = std::max(res, std::abs(ext[K] - cfg.alpha1 * tre[K] - cfg.alpha0_at(K) * g.values[K] * mu));
  out.flux_residual = res;
  return out;
}

// Fourier H^{1/2} and L2 distances of a cell function to a reference.
struct InterfaceError {
  double l2 = 0;
  double h12 = 0;
};

inline InterfaceError interface_error(const PiecewiseConstantFn<cplx>& g, const PiecewiseConstantFn<cplx>& ref,
                                      int eval_modes, double R) {
  const int L = std::max(g.level, ref.level);
  PiecewiseConstantFn<cplx> diff(g.p, L, g.refine(L).values - ref.refine(L).values);
  return {diff.l2_norm(R), sobolev_norm_fourier(fourier_of(diff, eval_modes), 0.5, R)};
}

inline InterfaceError interface_error(const PiecewiseConstantFn<cplx>& g, const FourierFn& ref, int eval_modes,
                                      double R) {
  // orthogonality: ||g - ref||^2 = ||g - P_N ref||^2 + ||ref - P_N ref||^2
  auto Pref = project_PN(ref, g.p, g.level);
  PiecewiseConstantFn<cplx> d(g.p, g.level, g.values - Pref.values);
  const double l2 = std::sqrt(std::pow(d.l2_norm(R), 2) + projection_error_sq(ref, g.p, g.level, R));
  auto df = fourier_of(g, eval_modes) - ref.widened(eval_modes);
  return {l2, sobolev_norm_fourier(df, 0.5, R)};
}

struct ConvergenceRow {
  int N = 0;
  std::int64_t dof = 0;
  double err_l2 = 0;
  double err_h12 = 0;
  double rate_running = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  int reference_level = -1;  // -1: exact reference
  int eval_modes = 0;
  double rho_hat = 0;
  double rho_bound = 0;  // (1 - 2 sigma) / (2 d), d = 1
  bool monotone = false;
};

namespace detail {

inline std::vector<int> sorted_levels(std::vector<int> levels, std::size_t min_count) {
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.size() < min_count)
    throw InsufficientLevels("need at least " + std::to_string(min_count) + " distinct levels");
  return levels;
}

inline void finish_table(ConvergenceTable& t, const TreeParams& params) {
  const double lp = std::log(double(params.p));
  t.monotone = true;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    auto& r = t.rows[i];
    const auto& q = t.rows[i - 1];
    r.rate_running = std::log(q.err_h12 / r.err_h12) / (double(r.N - q.N) * lp);
    if (r.err_h12 > q.err_h12) t.monotone = false;
  }
  std::vector<int> x;
  std::vector<double> e;
  for (const auto& r : t.rows) {
    x.push_back(r.N);
    e.push_back(std::max(r.err_h12, 1e-300));
  }
  t.rho_hat = fit_log_linear(x, e).rate_per_generation / lp;
  t.rho_bound = (1 - 2 * params.sigma()) / 2;
}

}  // namespace detail

inline TransmissionConfig at_level(TransmissionConfig cfg, int N) {
  if (cfg.alpha0.size() != 1) {
    PiecewiseConstantFn<cplx> a(cfg.tree.p, cfg.level,
                                Eigen::Map<const Eigen::VectorXcd>(cfg.alpha0.data(), cfg.alpha0.size()));
    auto b = project_PN(a, N);
    cfg.alpha0.assign(b.values.data(), b.values.data() + b.values.size());
  }
  cfg.level = N;
  return cfg;
}

// Per-level solves against the finest level as reference.
inline ConvergenceTable convergence_study(const TransmissionConfig& cfg, std::vector<int> levels) {
  levels = detail::sorted_levels(std::move(levels), 3);
  const int Nmax = levels.back();
  ConvergenceTable t;
  t.reference_level = Nmax;
  t.eval_modes = cfg.oversampling * int(ipow(cfg.tree.p, Nmax));
  const auto ref = solve_interface(assemble_system(at_level(cfg, Nmax))).g;
  for (int N : levels) {
    if (N == Nmax) continue;
    auto g = solve_interface(assemble_system(at_level(cfg, N))).g;
    auto e = interface_error(g, ref, t.eval_modes, cfg.radius);
    t.rows.push_back({N, g.size(), e.l2, e.h12});
  }
  detail::finish_table(t, cfg.tree);
  return t;
}

// Manufactured data: h := C g* - alpha1 D g* - alpha0 g* as cell integrals at
// level N. The exterior part uses the level-N band limit of the symbol; D g*
// is evaluated on V_ref with ref >= N.
inline Eigen::VectorXcd manufactured_rhs(const TransmissionConfig& cfg, const FourierFn& gstar, int ref_level) {
  const int N = cfg.level, p = cfg.tree.p;
  const double R = cfg.radius;
  const int M = cfg.mode_cutoff();
  Eigen::VectorXcd h = pair_with_cells(apply_symbol(dtn_symbol(R, M), gstar.widened(M)), p, N, R);
  auto Dg = apply_tree_dtn(cfg.tree, project_PN(gstar, p, std::max(ref_level, N)));
  const auto f = ipow(p, std::max(ref_level, N) - N);
  for (std::size_t K = 0; K < Dg.size(); ++K) h[K / f] -= cfg.alpha1 * Dg[K];
  auto Pg = project_PN(gstar, p, N);
  const double mu = two_pi * R / double(h.size());
  for (Eigen::Index K = 0; K < h.size(); ++K) h[K] -= cfg.alpha0_at(K) * Pg.values[K] * mu;
  return h;
}

inline Eigen::VectorXcd manufactured_rhs(const TransmissionConfig& cfg, const PiecewiseConstantFn<cplx>& gstar,
                                         int ref_level) {
  const int N = cfg.level, p = cfg.tree.p;
  const double R = cfg.radius;
  const int M = cfg.mode_cutoff();
  Eigen::VectorXcd h = pair_with_cells(apply_symbol(dtn_symbol(R, M), fourier_of(gstar, M)), p, N, R);
  const int L = std::max({ref_level, N, gstar.level});
  auto Dg = apply_tree_dtn(cfg.tree, gstar.refine(L));
  const auto f = ipow(p, L - N);
  for (std::size_t K = 0; K < Dg.size(); ++K) h[K / f] -= cfg.alpha1 * Dg[K];
  auto Pg = project_PN(gstar.refine(L), N);
  const double mu = two_pi * R / double(h.size());
  for (Eigen::Index K = 0; K < h.size(); ++K) h[K] -= cfg.alpha0_at(K) * Pg.values[K] * mu;
  return h;
}

// Solves with injected manufactured data at each level; errors against g*.
template <class G>
ConvergenceTable manufactured_study(const TransmissionConfig& cfg, const G& gstar, std::vector<int> levels,
                                    int ref_offset = 4) {
  levels = detail::sorted_levels(std::move(levels), 2);
  ConvergenceTable t;
  t.eval_modes = cfg.oversampling * int(ipow(cfg.tree.p, levels.back()));
  for (int N : levels) {
    auto c = at_level(cfg, N);
    auto sys = assemble_operators(c);
    sys.h = manufactured_rhs(c, gstar, N + ref_offset);
    auto g = solve_interface(sys).g;
    auto e = interface_error(g, gstar, t.eval_modes, cfg.radius);
    t.rows.push_back({N, g.size(), e.l2, e.h12});
  }
  detail::finish_table(t, cfg.tree);
  return t;
}

}  // namespace mixdim
