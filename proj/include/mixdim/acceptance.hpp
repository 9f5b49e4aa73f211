#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "transmission.hpp"

namespace mixdim::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

inline std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

inline TreeParams reference_tree() { return TreeParams{}; }

// ell/p < omega < min(ell, 1/(ell p)) keeps r in (0,1) and sigma < 1/2.
inline TreeParams random_admissible(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0, 1);
  TreeParams t;
  t.p = 2 + int(U(rng) * 2);
  t.ell = 0.2 + 0.7 * U(rng);
  const double lo = t.ell / t.p, hi = std::min(t.ell, 1 / (t.ell * t.p));
  t.omega = lo + (hi - lo) * (0.05 + 0.9 * U(rng));
  t.L0 = 0.5 + U(rng);
  t.omega0 = 0.5 + 2 * U(rng);
  return t;
}

inline TreeFunction<double> random_continuous(const TreePtr& t, std::mt19937_64& rng, int degree) {
  std::uniform_real_distribution<double> U(-1, 1);
  TreeFunction<double> v(t);
  for (std::int64_t i = 0; i < t->num_edges(); ++i) {
    std::vector<double> c{i == 0 ? 0.0 : v.end_value(t->parent(i))};
    for (int j = 1; j <= degree; ++j) c.push_back(U(rng));
    v.edge(i) = Polynomial<double>(c);
  }
  return v;
}

inline CriterionResult interval_oracle() {
  CriterionResult r{1, "interval oracle"};
  const TreeParams path{1, 0.5, 1.0, 1.0, 1.0, 0, {}, {}};
  double err_trunc = 0, err_shift = 0, err_cond = 0;
  for (int N = 1; N <= 6; ++N) {
    const double d = truncated_dtn(path, N).matrix(0, 0);
    err_trunc = std::max(err_trunc, std::abs(d - 0.5 / (1 - std::pow(0.5, N))));
    err_shift = std::max(err_shift, std::abs(d - 0.5 / (1 - std::pow(0.5, N + 1))));
    err_cond = std::max(err_cond, std::abs(condensed_dtn(path, N).matrix(0, 0) - 0.5));
  }
  r.passed = err_trunc <= 1e-12 && err_cond <= 1e-12;
  r.detail = fmt("truncated err %.3g (against 0.5/(1-0.5^(N+1)): %.3g), condensed err %.3g", err_trunc, err_shift,
                 err_cond);
  return r;
}

inline CriterionResult radial_oracle() {
  CriterionResult r{2, "radial oracle"};
  const auto t = reference_tree();
  double worst = 0;
  for (int N = 2; N <= 8; ++N) {
    const auto A = condensed_dtn(t, N);
    const Eigen::VectorXd v = A.matrix * Eigen::VectorXd::Ones(A.size());
    const double cell = 0.375 / double(A.size());
    worst = std::max(worst, (v.array() - cell).abs().maxCoeff() / cell);
  }
  r.passed = worst <= 1e-10;
  r.detail = fmt("max relative error %.3g (F = 0.375)", worst);
  return r;
}

inline CriterionResult condensation_exactness() {
  CriterionResult r{3, "condensation exactness"};
  const auto t = reference_tree();
  double worst = 0;
  for (int N = 2; N <= 4; ++N) {
    const auto fine = compress(condensed_dtn(t, N + 3), N + 1);
    worst = std::max(worst, (fine.matrix - condensed_dtn(t, N).matrix).cwiseAbs().maxCoeff());
  }
  r.passed = worst <= 1e-9;
  r.detail = fmt("max entry difference %.3g", worst);
  return r;
}

inline CriterionResult tree_coercivity(std::uint64_t seed) {
  CriterionResult r{4, "tree DtN coercivity"};
  std::mt19937_64 rng(seed);
  double lam = 1e300, sym = 0;
  bool ok = true;
  for (int i = 0; i < 10; ++i) {
    auto t = random_admissible(rng);
    auto rep = coercivity_check(condensed_dtn(t, 3), OperatorKind::TreeDtN);
    lam = std::min(lam, rep.min_eig);
    sym = std::max(sym, rep.symmetry_defect);
    ok = ok && rep.min_eig > 0 && rep.symmetry_defect < 1e-9 && validate_params(t).passed();
  }
  r.passed = ok;
  r.detail = fmt("min eigenvalue %.3g, max symmetry defect %.3g over 10 sets", lam, sym);
  return r;
}

inline CriterionResult projector_bound() {
  CriterionResult r{5, "projector error bound"};
  const auto g = FourierFn::cosine(1);
  const double sigma = reference_tree().sigma(), sp = 0.42;
  int violations = 0;
  double worst = 0;
  for (int N = 2; N <= 10; ++N) {
    auto c = projector_error_check(g, 2, 1.0, N, sigma, sp, 60);
    const double rhs = 2.667 / c.constant * c.rhs;
    if (!(c.lhs <= rhs)) ++violations;
    worst = std::max(worst, c.lhs / rhs);
  }
  r.passed = violations == 0;
  r.detail = fmt("violations %.0f, max lhs/rhs %.3g", violations, worst);
  return r;
}

inline CriterionResult exterior_suite() {
  CriterionResult r{6, "exterior symbol suite"};
  // single-layer quadrature, singularity subtracted
  const double R = 1.0, rs = 2.0;
  const int n = 2048;
  const auto L = layer_symbols(R, rs, 8);
  double sq = 0;
  for (int k = -8; k <= 8; ++k) {
    const double t0 = 0.3, h = two_pi / n;
    const cplx g0 = std::exp(cplx(0, k * t0));
    cplx s = 0;
    for (int j = 0; j < n; ++j) {
      const double phi = t0 + (j + 0.5) * h;
      const double dist = 2 * R * std::abs(std::sin((phi - t0) / 2));
      s += std::log(rs / dist) / two_pi * (std::exp(cplx(0, k * phi)) - g0) * R * h;
    }
    s += g0 * R * std::log(rs / R);
    sq = std::max(sq, std::abs(s / g0 - L.S.at(k)));
  }
  const double bie = bie_dtn_crosscheck(R, rs, 64);
  double nsd = 0, ker = 0;
  for (int N = 1; N <= 6; ++N) {
    auto A = exterior_operator(R, 2, N, 16).matrix;
    const double scale = A.cwiseAbs().maxCoeff();
    nsd = std::max(nsd, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (A + A.transpose()))
                                .eigenvalues()
                                .maxCoeff() /
                            scale);
    ker = std::max(ker, (A * Eigen::VectorXd::Ones(A.rows())).cwiseAbs().maxCoeff());
  }
  r.passed = sq <= 1e-6 && bie <= 1e-12 && nsd <= 1e-12 && ker <= 1e-10;
  r.detail = fmt("S quadrature %.3g, boundary-equation defect %.3g, max eig/scale %.3g", sq, bie, nsd) +
             fmt(", |A 1| %.3g", ker);
  return r;
}

inline CriterionResult green_identity(std::uint64_t seed) {
  CriterionResult r{7, "Green identity"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto params = random_admissible(rng);
    const int N = 1 + trial % 5;
    auto t = trial % 2 ? build_truncated(params, N) : build_condensed(params, N - 1);
    TreeFunction<double> src(t);
    for (std::int64_t i = 0; i < t->num_edges(); ++i) src.edge(i) = Polynomial<double>({U(rng), U(rng), U(rng)});
    std::vector<double> g(t->num_leaves());
    for (auto& x : g) x = U(rng);
    auto u = DirichletSolver(t).solve(g, U(rng), &src);
    auto v = random_continuous(t, rng, 1 + trial % 4);
    worst = std::max(worst, green_identity_check(u, v).defect);
  }
  r.passed = worst <= 1e-9;
  r.detail = fmt("max defect %.3g over 100 pairs", worst);
  return r;
}

inline CriterionResult manufactured(std::uint64_t seed) {
  CriterionResult r{8, "transmission manufactured solution"};
  TransmissionConfig cfg;
  cfg.alpha1 = 1.0;
  cfg.alpha0 = {0.3};
  auto t = manufactured_study(cfg, FourierFn::cosine(1), {3, 4, 5, 6, 7, 8});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  Eigen::VectorXcd v(8);
  for (auto& x : v) x = cplx(U(rng), U(rng));
  auto e = manufactured_study(cfg, PiecewiseConstantFn<cplx>(2, 3, v), {3, 4, 5, 6, 7, 8});
  double exact = 0;
  for (const auto& row : e.rows) exact = std::max(exact, row.err_h12);
  bool strict = true;
  for (std::size_t i = 1; i < t.rows.size(); ++i) strict = strict && t.rows[i].err_h12 < t.rows[i - 1].err_h12;
  r.passed = strict && t.rho_hat > 0 && exact <= 1e-9;
  r.detail = fmt("cos: H^1/2 error %.3g -> %.3g, rho_hat %.3g", t.rows.front().err_h12, t.rows.back().err_h12,
                 t.rho_hat) +
             fmt(", V_3 data max error %.3g", exact);
  return r;
}

inline CriterionResult solvability(std::uint64_t seed) {
  CriterionResult r{9, "sufficient solvability conditions"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> P(0, 2), A(-2, 2);
  double worst = 1e300;
  bool ok = true;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 20; ++i) {
      TransmissionConfig cfg;
      cfg.level = 4;
      cfg.alpha0.resize(16);
      if (c == 0) {
        cfg.alpha1 = cplx(P(rng), A(rng));
        for (auto& a : cfg.alpha0) a = cplx(P(rng), A(rng));
      } else {
        cfg.alpha1 = cplx(A(rng), P(rng));
        for (auto& a : cfg.alpha0) a = cplx(A(rng), P(rng));
      }
      auto sys = assemble_operators(cfg);
      ok = ok && (c == 0 ? sys.flags.case_i : sys.flags.case_ii);
      sys.h.setOnes();
      try {
        auto s = solve_interface(sys);
        worst = std::min(worst, s.rcond);
        ok = ok && std::isfinite(1 / s.rcond);
      } catch (const SingularInterfaceOperator&) {
        ok = false;
      }
    }
  TransmissionConfig cfg;
  cfg.level = 4;
  cfg.alpha0 = {0.0};
  auto base = assemble_operators(cfg);
  cfg.alpha1 = plasmonic_pencil(base.C, base.D).values[1];
  auto sys = assemble_operators(cfg);
  sys.h.setOnes();
  bool raised = false;
  try {
    solve_interface(sys);
  } catch (const SingularInterfaceOperator&) {
    raised = true;
  }
  r.passed = ok && raised;
  r.detail = fmt("min rcond over 40 draws %.3g, pencil eigenvalue %.6g", worst, cfg.alpha1.real()) +
             (raised ? ", singular operator reported" : ", singular operator NOT reported");
  return r;
}

inline CriterionResult plasmonic() {
  CriterionResult r{10, "plasmonic pencil"};
  bool ok = true;
  double im = 0, re = -1e300, align = 1;
  for (int N = 3; N <= 6; ++N) {
    TransmissionConfig cfg;
    cfg.level = N;
    auto sys = assemble_operators(cfg);
    auto pen = plasmonic_pencil(sys.C, sys.D);
    const double scale = std::abs(pen.values.back());
    int zeros = 0;
    for (std::size_t j = 0; j < pen.values.size(); ++j) {
      if (std::abs(pen.values[j]) <= 1e-10 * scale) {
        ++zeros;
        const Eigen::VectorXcd one = Eigen::VectorXcd::Ones(sys.C.rows()).normalized();
        align = std::min(align, std::abs(one.dot(pen.vectors.col(j))));
        continue;
      }
      im = std::max(im, std::abs(pen.values[j].imag()));
      re = std::max(re, pen.values[j].real());
    }
    ok = ok && zeros == 1;
  }
  r.passed = ok && im <= 1e-8 && re < 0 && align >= 1 - 1e-10;
  r.detail = fmt("max |Im| %.3g, max Re %.6g, zero-mode alignment with constants %.12g", im, re, align);
  return r;
}

inline std::vector<CriterionResult> run_all(std::uint64_t seed = 12345) {
  const double limits[] = {1, 10, 30, 1e300, 1e300, 1e300, 1e300, 120, 1e300, 1e300};
  std::vector<std::function<CriterionResult()>> jobs = {
      interval_oracle,
      radial_oracle,
      condensation_exactness,
      [&] { return tree_coercivity(seed); },
      projector_bound,
      exterior_suite,
      [&] { return green_identity(seed + 1); },
      [&] { return manufactured(seed + 2); },
      [&] { return solvability(seed + 3); },
      plasmonic,
  };
  std::vector<CriterionResult> out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = jobs[i]();
    } catch (const std::exception& e) {
      r = {int(i) + 1, "criterion " + std::to_string(i + 1), false, std::string("exception: ") + e.what()};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.seconds > limits[i]) {
      r.passed = false;
      r.detail += fmt(" (runtime limit %.0f s exceeded)", limits[i]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline bool report(const std::vector<CriterionResult>& results, std::ostream& os) {
  bool all = true;
  for (const auto& r : results) {
    char head[96];
    std::snprintf(head, sizeof head, "criterion %2d %s  %-36s", r.id, r.passed ? "PASS" : "FAIL", r.name.c_str());
    os << head << " " << r.detail << fmt("  [%.2f s]", r.seconds) << "\n";
    all = all && r.passed;
  }
  return all;
}

}  // namespace mixdim::acceptance
