#include <gtest/gtest.h>

#include <random>

#include "mixdim/transmission.hpp"

using namespace mixdim;

namespace {

TransmissionConfig reference_config(int N = 3) {
  TransmissionConfig cfg;
  cfg.level = N;
  cfg.alpha1 = 1.0;
  cfg.alpha0 = {0.3};
  return cfg;
}

RadialSource sample_exterior_source(cplx a = 1.0) {
  RadialSource s;
  s.R_max = 2.0;
  s.modes[0] = LaurentPolynomial{0, {a * 1.0, a * -0.5}};
  s.modes[2] = LaurentPolynomial{0, {0.0, a * 0.7}};
  s.modes[-2] = LaurentPolynomial{0, {0.0, a * 0.7}};
  return s;
}

double min_eig_hermitian(const Eigen::MatrixXcd& M) {
  Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(H).eigenvalues().minCoeff();
}

}  // namespace

TEST(Transmission, ZeroDataGivesZeroSolution) {
  auto cfg = reference_config();
  auto sys = assemble_system(cfg);
  EXPECT_EQ(sys.h.norm(), 0.0);
  auto sol = solve_interface(sys);
  EXPECT_EQ(sol.g.values.norm(), 0.0);
  auto rec = reconstruct(cfg, sol);
  EXPECT_EQ(l2_norm(rec.u_tree), 0.0);
  EXPECT_EQ(std::abs(rec.u_exterior(3.0, 1.0)), 0.0);
}

TEST(Transmission, AssemblyIdentity) {
  auto cfg = reference_config(4);
  cfg.alpha0 = {0.0};
  auto sys = assemble_operators(cfg);
  Eigen::MatrixXcd expect = (-exterior_operator(1.0, 2, 4, 16).matrix + condensed_dtn(cfg.tree, 3).matrix).cast<cplx>();
  EXPECT_LT((sys.M() - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Transmission, ConfigErrors) {
  auto cfg = reference_config();
  cfg.alpha1 = 0.0;
  EXPECT_THROW(assemble_system(cfg), Alpha1Zero);
  cfg = reference_config(1);
  cfg.tree.N1 = 2;
  EXPECT_THROW(assemble_system(cfg), DepthBelowChartLevel);
  cfg = reference_config(2);
  cfg.chart_level = 3;
  EXPECT_THROW(assemble_system(cfg), DepthBelowChartLevel);
  cfg = reference_config(2);
  cfg.alpha0 = {1.0, 2.0, 3.0};
  EXPECT_THROW(assemble_system(cfg), DepthMismatch);
}

TEST(Transmission, SolvabilityFlags) {
  auto cfg = reference_config();
  EXPECT_TRUE(solvability_flags(cfg).case_i);
  EXPECT_FALSE(solvability_flags(cfg).case_ii);
  cfg.alpha1 = cplx(0, 1);
  cfg.alpha0 = {0.0};
  EXPECT_FALSE(solvability_flags(cfg).case_i);
  EXPECT_TRUE(solvability_flags(cfg).case_ii);
  cfg.alpha1 = -1.0;
  EXPECT_FALSE(solvability_flags(cfg).any());
}

TEST(Transmission, RootForcingMatchesRadialFlux) {
  // c u1 + u_f is radial harmonic with value c at the root and zero trace:
  // total flux -c (1 - r) omega0 / L0, split evenly over the cells
  for (int Ns : {4, 6, 9}) {
    auto cfg = reference_config(3);
    cfg.c_root = cplx(0.8, -0.2);
    cfg.alpha1 = cplx(1.5, 0.5);
    cfg.source_depth = Ns;
    auto sys = assemble_system(cfg);
    const cplx expect = cfg.alpha1 * cfg.c_root * (-(1 - cfg.tree.r()) / 8.0);
    for (Eigen::Index K = 0; K < 8; ++K) EXPECT_NEAR(std::abs(sys.h[K] - expect), 0, 1e-12) << Ns;
  }
}

TEST(Transmission, TreeSourceConvergesWithSourceDepth) {
  auto cfg = reference_config(2);
  cfg.tree_source.coeffs = {1.0, -2.0};
  std::vector<Eigen::VectorXcd> h;
  for (int Ns : {5, 8, 11}) {
    cfg.source_depth = Ns;
    h.push_back(assemble_system(cfg).h);
  }
  const double d1 = (h[1] - h[0]).norm(), d2 = (h[2] - h[1]).norm();
  EXPECT_GT(h[2].norm(), 0);
  EXPECT_LT(d2, 0.5 * d1);
}

TEST(Transmission, RhsAndSolutionLinearity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  auto cfg = reference_config(3);
  cfg.alpha1 = cplx(1.0, 0.3);
  auto with = [&](cplx c, std::vector<cplx> ft, cplx fo) {
    auto k = cfg;
    k.c_root = c;
    k.tree_source.coeffs = std::move(ft);
    if (fo != 0.0) k.exterior_source = sample_exterior_source(fo);
    return k;
  };
  for (int trial = 0; trial < 5; ++trial) {
    const cplx a(U(rng), U(rng)), b(U(rng), U(rng));
    const cplx c1(U(rng), U(rng)), c2(U(rng), U(rng)), e1(U(rng), U(rng)), e2(U(rng), U(rng));
    std::vector<cplx> f1 = {U(rng), U(rng), U(rng)}, f2 = {U(rng), U(rng), U(rng)}, fab(3);
    for (int j = 0; j < 3; ++j) fab[j] = a * f1[j] + b * f2[j];
    auto s1 = assemble_system(with(c1, f1, e1)), s2 = assemble_system(with(c2, f2, e2));
    auto s12 = assemble_system(with(a * c1 + b * c2, fab, a * e1 + b * e2));
    EXPECT_LT((s12.h - a * s1.h - b * s2.h).norm(), 1e-10 * s12.h.norm());
    auto g12 = solve_interface(s12).g.values;
    auto g1 = solve_interface(s1).g.values, g2 = solve_interface(s2).g.values;
    EXPECT_LT((g12 - a * g1 - b * g2).norm(), 1e-10 * g12.norm());
  }
}

TEST(Transmission, ReconstructionSatisfiesBothConditions) {
  auto cfg = reference_config(3);
  cfg.alpha1 = cplx(2.0, 1.0);
  cfg.alpha0 = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  cfg.c_root = 0.5;
  cfg.tree_source.coeffs = {1.0, 0.0, -1.0};
  cfg.exterior_source = sample_exterior_source();
  auto sys = assemble_system(cfg);
  auto sol = solve_interface(sys);
  EXPECT_LT(sol.residual, 1e-10);
  auto rec = reconstruct(cfg, sol);
  EXPECT_LT(rec.trace_defect_tree, 1e-10);
  EXPECT_LT(rec.trace_defect_exterior, 1e-10);
  EXPECT_LT(rec.flux_residual, 1e-10 * std::max(1.0, sys.h.cwiseAbs().maxCoeff()));
  EXPECT_NEAR(std::abs(rec.u_tree.root_value() - cfg.c_root), 0, 1e-14);
}

TEST(Transmission, LargeCouplingBoundsInterfaceData) {
  auto cfg = reference_config(4);
  cfg.alpha1 = 1000.0;
  cfg.alpha0 = {0.0};
  cfg.exterior_source = sample_exterior_source();
  auto sys = assemble_system(cfg);
  auto g = solve_interface(sys).g;
  EXPECT_LE(g.values.norm(), sys.h.norm() / min_eig_hermitian(sys.M()) * (1 + 1e-12));
  auto rec = reconstruct(cfg, solve_interface(sys));
  auto vf = exterior_particular(cfg);
  EXPECT_LT(std::abs(rec.u_exterior(1.5, 0.3) - vf(1.5, 0.3)), 0.05 * std::abs(vf(1.5, 0.3)));
}

TEST(Transmission, HermitianPartPositiveForCaseOne) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0, 2), V(-2, 2);
  for (int trial = 0; trial < 10; ++trial) {
    auto cfg = reference_config(4);
    cfg.alpha1 = cplx(U(rng), V(rng));
    cfg.alpha0.assign(16, 0.0);
    for (auto& a : cfg.alpha0) a = cplx(U(rng), V(rng));
    ASSERT_TRUE(solvability_flags(cfg).case_i);
    auto sys = assemble_operators(cfg);
    const double lD = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.D).eigenvalues().minCoeff();
    const double lC = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(-sys.C).eigenvalues().minCoeff();
    double a0 = 1e300;
    for (auto a : sys.A0) a0 = std::min(a0, a.real());
    const double lam = min_eig_hermitian(sys.M());
    EXPECT_GT(lam, 0);
    EXPECT_GE(lam, cfg.alpha1.real() * lD + a0 + lC - 1e-10);
  }
}

TEST(Transmission, CaseTwoSolvable) {
  auto cfg = reference_config(4);
  cfg.alpha1 = cplx(0, 1);
  cfg.alpha0 = {0.0};
  cfg.exterior_source = sample_exterior_source();
  auto sol = solve_interface(assemble_system(cfg));
  EXPECT_GT(sol.rcond, 1e-12);
  EXPECT_LT(sol.residual, 1e-10);
}

TEST(Transmission, PencilEigenvalueIsSingular) {
  auto cfg = reference_config(4);
  cfg.alpha0 = {0.0};
  auto sys = assemble_operators(cfg);
  auto pen = plasmonic_pencil(sys.C, sys.D);
  cfg.alpha1 = pen.values[3];
  auto bad = assemble_operators(cfg);
  bad.h.setOnes();
  try {
    solve_interface(bad);
    FAIL() << "expected SingularInterfaceOperator";
  } catch (const SingularInterfaceOperator& e) {
    EXPECT_NE(std::string(e.what()).find("nearest pencil eigenvalue"), std::string::npos);
  }
}

TEST(Transmission, PencilSignsAndConstantMode) {
  for (int N = 3; N <= 6; ++N) {
    auto sys = assemble_operators(reference_config(N));
    auto pen = plasmonic_pencil(sys.C, sys.D);
    ASSERT_EQ(pen.values.size(), size_t(sys.C.rows()));
    const double scale = std::abs(pen.values.back());
    EXPECT_LT(std::abs(pen.values[0]), 1e-10 * scale);
    Eigen::VectorXcd one = Eigen::VectorXcd::Ones(sys.C.rows()).normalized();
    EXPECT_NEAR(std::abs(one.dot(pen.vectors.col(0))), 1.0, 1e-10);
    for (std::size_t j = 1; j < pen.values.size(); ++j) {
      EXPECT_LT(pen.values[j].real(), 0);
      EXPECT_LE(std::abs(pen.values[j].imag()), 1e-8);
    }
  }
}

TEST(Transmission, PencilScalesWithWeights) {
  auto cfg = reference_config(4);
  auto pen = plasmonic_pencil(assemble_operators(cfg).C, assemble_operators(cfg).D);
  cfg.tree = cfg.tree.with_weights_scaled(3.0);
  auto sys = assemble_operators(cfg);
  auto pen3 = plasmonic_pencil(sys.C, sys.D);
  for (std::size_t j = 1; j < pen.values.size(); ++j)
    EXPECT_NEAR(std::abs(pen3.values[j] - pen.values[j] / 3.0), 0, 1e-10 * std::abs(pen.values[j]));
}

TEST(Transmission, PencilLeadingValuesSettle) {
  // successive changes of the leading nonzero eigenvalues contract with N
  std::vector<std::vector<double>> v;
  for (int N = 4; N <= 8; ++N) {
    auto s = assemble_operators(reference_config(N));
    auto pen = plasmonic_pencil(s.C, s.D, 4);
    v.push_back({pen.values[1].real(), pen.values[2].real(), pen.values[3].real()});
  }
  for (int j = 0; j < 3; ++j)
    for (std::size_t i = 2; i < v.size(); ++i) {
      const double d1 = std::abs(v[i - 1][j] - v[i - 2][j]), d2 = std::abs(v[i][j] - v[i - 1][j]);
      EXPECT_LT(d2, 0.7 * d1) << "N=" << i + 4 << " j=" << j;
      EXPECT_GT(v[i][j], v[i - 1][j]);
    }
}

TEST(Transmission, ManufacturedExactInCoarseSpace) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  Eigen::VectorXcd v(8);
  for (auto& x : v) x = cplx(U(rng), U(rng));
  PiecewiseConstantFn<cplx> gstar(2, 3, v);
  auto t = manufactured_study(reference_config(), gstar, {3, 4, 5, 6});
  for (const auto& r : t.rows) EXPECT_LE(r.err_h12, 1e-9) << r.N;
}

TEST(Transmission, ManufacturedCosineConverges) {
  auto t = manufactured_study(reference_config(), FourierFn::cosine(1), {3, 4, 5, 6});
  EXPECT_TRUE(t.monotone);
  EXPECT_GT(t.rho_hat, 0);
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_LT(t.rows[i].err_l2, t.rows[i - 1].err_l2);
}

TEST(Transmission, ConvergenceStudyAgainstFinest) {
  auto cfg = reference_config(3);
  cfg.exterior_source = sample_exterior_source();
  cfg.c_root = 0.5;
  auto t = convergence_study(cfg, {2, 3, 4, 5});
  EXPECT_EQ(t.reference_level, 5);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_TRUE(t.monotone);
  EXPECT_GT(t.rho_hat, 0);
  EXPECT_NEAR(t.rho_bound, (1 - 2 * cfg.tree.sigma()) / 2, 1e-15);
  EXPECT_THROW(convergence_study(cfg, {2, 3}), InsufficientLevels);
}
