#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mixdim/acceptance.hpp"
#include "mixdim/config.hpp"
#include "mixdim/csv.hpp"
#include "mixdim/transmission.hpp"

using namespace mixdim;
namespace fs = std::filesystem;

namespace {

enum Exit { Ok = 0, ValidationFailure = 2, NumericalFailure = 3 };

using Manifest = std::vector<std::pair<std::string, std::string>>;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Manifest echo(const std::string& sub, const ConfigFile* f) {
  Manifest m{{"subcommand", sub}};
  if (f) {
    m.emplace_back("config_fnv1a", hex(fnv1a(f->text())));
    for (const auto& [k, e] : f->entries()) m.emplace_back("param." + k, e.value);
  }
  return m;
}

void finish_manifest(const fs::path& path, Manifest m, const Timer& t, const std::vector<fs::path>& outputs) {
  for (const auto& o : outputs) m.emplace_back("output", o.string());
  m.emplace_back("wall_time_s", format_number(t.seconds()));
  write_manifest(path, m);
}

// "<prefix>name" or "<dir>/name" when the prefix is a directory.
fs::path with_prefix(const std::string& prefix, const std::string& name) {
  if (prefix.empty()) return name;
  if (prefix.back() == '/' || fs::is_directory(prefix)) return fs::path(prefix) / name;
  return prefix + name;
}

void write_matrix(const fs::path& path, const Eigen::MatrixXd& A) {
  CsvWriter w(path, {"row", "col", "value"});
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) w.row(std::int64_t(i), std::int64_t(j), A(i, j));
  w.commit();
}

void write_convergence(const fs::path& path, const ConvergenceTable& t) {
  CsvWriter w(path, {"N", "dof", "err_l2", "err_h12", "rate_running"});
  for (const auto& r : t.rows) w.row(r.N, r.dof, r.err_l2, r.err_h12, r.rate_running);
  w.commit();
}

void write_pencil(const fs::path& path, const PencilResult& p) {
  CsvWriter w(path, {"index", "re", "im"});
  for (std::size_t j = 0; j < p.values.size(); ++j) w.row(std::int64_t(j), p.values[j].real(), p.values[j].imag());
  w.commit();
}

std::vector<int> study_levels(const RunConfig& rc) {
  if (!rc.levels.empty()) return rc.levels;
  const int lo = std::max({rc.transmission.chart_level, rc.tree.N1, rc.interface_level - 2, 1});
  return {lo, lo + 1, lo + 2};
}

int cmd_validate(const std::string& config) {
  auto f = ConfigFile::load(config);
  auto rc = run_config(f);
  auto rep = validate_params(rc.tree);
  std::cout << "sigma = " << format_number(rep.sigma) << "\n";
  std::cout << "r = " << format_number(rep.r) << "\n";
  std::cout << "min_C = " << format_number(rep.min_C) << "\n";
  for (const auto& c : rep.checks) std::cout << (c.passed ? "ok   " : "FAIL ") << c.name << "\n";
  if (!rep.passed()) {
    const auto* bad = rep.first_failure();
    std::cerr << "validation failed: " << bad->name << " (" << bad->detail << ")\n";
    return ValidationFailure;
  }
  if (!(rc.radius > 0)) throw NonPositiveParameter("interface.radius must be positive");
  return Ok;
}

int cmd_tree_dtn(const std::string& config, int depth, const std::string& out, bool truncated, bool allow_large) {
  Timer t;
  auto f = ConfigFile::load(config);
  auto rc = run_config(f);
  require_valid(rc.tree);
  AssemblyOptions opt;
  opt.allow_large = allow_large || rc.allow_large;
  auto op = truncated ? truncated_dtn(rc.tree, depth, opt) : tree_operator(rc.tree, depth, opt);
  write_matrix(out, op.matrix);
  auto m = echo("tree-dtn", &f);
  m.emplace_back("depth", std::to_string(depth));
  m.emplace_back("kind", truncated ? "truncated" : "condensed");
  finish_manifest(out + ".manifest", m, t, {out});
  return Ok;
}

int cmd_exterior_dtn(double R, int level, int modes, const std::string& out, const std::string& matrix_out,
                     int p, bool allow_large) {
  Timer t;
  if (!(R > 0)) throw NonPositiveParameter("radius must be positive");
  auto sym = dtn_symbol(R, modes);
  {
    CsvWriter w(out, {"k", "value"});
    for (int k = -modes; k <= modes; ++k) w.row(k, sym.at(k));
    w.commit();
  }
  std::vector<fs::path> outs{out};
  if (!matrix_out.empty()) {
    AssemblyOptions opt;
    opt.allow_large = allow_large;
    auto A = dtn_galerkin(MultiscaleDecomposition(R, p, std::max(level, 1)), level, sym, 16, opt);
    write_matrix(matrix_out, A.matrix);
    outs.emplace_back(matrix_out);
  }
  Manifest m = echo("exterior-dtn", nullptr);
  m.insert(m.end(), {{"radius", format_number(R)},
                     {"level", std::to_string(level)},
                     {"modes", std::to_string(modes)},
                     {"p", std::to_string(p)}});
  finish_manifest(out + ".manifest", m, t, outs);
  return Ok;
}

int cmd_transmission(const std::string& config, const std::string& prefix_arg) {
  Timer t;
  auto f = ConfigFile::load(config);
  auto rc = run_config(f);
  const std::string prefix = prefix_arg.empty() ? rc.output_dir + "/" : prefix_arg;
  const auto& cfg = rc.transmission;
  auto sys = assemble_system(cfg);
  auto sol = solve_interface(sys);
  auto rec = reconstruct(cfg, sol);
  std::vector<fs::path> outs;

  auto path = with_prefix(prefix, "interface_g.csv");
  {
    CsvWriter w(path, {"level", "cell", "re", "im"});
    for (std::int64_t K = 0; K < sol.g.size(); ++K) w.row(sol.g.level, K, sol.g.values[K].real(), sol.g.values[K].imag());
    w.commit();
  }
  outs.push_back(path);

  path = with_prefix(prefix, "tree_function.csv");
  {
    CsvWriter w(path, {"n", "k", "coeff_index", "re", "im"});
    const auto& tr = rec.u_tree.tree();
    for (std::int64_t i = 0; i < tr.num_edges(); ++i) {
      const auto e = tr.ref(i);
      const auto& c = rec.u_tree.edge(i).coeffs();
      for (std::size_t j = 0; j < c.size(); ++j) w.row(e.n, e.k, std::int64_t(j), c[j].real(), c[j].imag());
    }
    w.commit();
  }
  outs.push_back(path);

  path = with_prefix(prefix, "exterior_modes.csv");
  {
    CsvWriter w(path, {"k", "alpha_re", "alpha_im", "beta_re", "beta_im"});
    for (const auto& [k, m] : rec.u_exterior.modes())
      w.row(k, m.alpha.real(), m.alpha.imag(), m.beta.real(), m.beta.imag());
    w.commit();
  }
  outs.push_back(path);

  auto table = convergence_study(cfg, study_levels(rc));
  path = with_prefix(prefix, "convergence.csv");
  write_convergence(path, table);
  outs.push_back(path);

  path = with_prefix(prefix, "pencil.csv");
  write_pencil(path, plasmonic_pencil(sys.C, sys.D, rc.pencil_count));
  outs.push_back(path);

  auto m = echo("transmission", &f);
  const auto flags = solvability_flags(cfg);
  m.insert(m.end(), {{"solvable_real_parts", flags.case_i ? "true" : "false"},
                     {"solvable_imag_parts", flags.case_ii ? "true" : "false"},
                     {"rcond", format_number(sol.rcond)},
                     {"solve_residual", format_number(sol.residual)},
                     {"trace_defect_tree", format_number(rec.trace_defect_tree)},
                     {"trace_defect_exterior", format_number(rec.trace_defect_exterior)},
                     {"flux_residual", format_number(rec.flux_residual)},
                     {"rho_hat", format_number(table.rho_hat)},
                     {"rho_bound", format_number(table.rho_bound)}});
  finish_manifest(with_prefix(prefix, "manifest.txt"), m, t, outs);
  std::cout << "g_N at level " << sol.g.level << ", rcond " << format_number(sol.rcond) << ", flux residual "
            << format_number(rec.flux_residual) << "\n";
  return Ok;
}

int cmd_convergence(const std::string& config, std::string out, const std::string& manufactured) {
  Timer t;
  auto f = ConfigFile::load(config);
  auto rc = run_config(f);
  if (out.empty()) out = (fs::path(rc.output_dir) / "convergence.csv").string();
  auto levels = study_levels(rc);
  ConvergenceTable table;
  if (manufactured == "cos")
    table = manufactured_study(rc.transmission, FourierFn::cosine(1), levels);
  else if (manufactured.empty())
    table = convergence_study(rc.transmission, levels);
  else
    throw ConfigError("unknown manufactured solution '" + manufactured + "' (expected cos)");
  write_convergence(out, table);
  auto m = echo("convergence", &f);
  m.insert(m.end(), {{"reference_level", std::to_string(table.reference_level)},
                     {"eval_modes", std::to_string(table.eval_modes)},
                     {"rho_hat", format_number(table.rho_hat)},
                     {"rho_bound", format_number(table.rho_bound)},
                     {"monotone", table.monotone ? "true" : "false"}});
  finish_manifest(out + ".manifest", m, t, {out});
  std::cout << "rho_hat = " << format_number(table.rho_hat) << " (admissible below " << format_number(table.rho_bound)
            << ")\n";
  return Ok;
}

int cmd_plasmonic(const std::string& config, std::string out, int level, int count) {
  Timer t;
  auto f = ConfigFile::load(config);
  auto rc = run_config(f);
  if (out.empty()) out = (fs::path(rc.output_dir) / "pencil.csv").string();
  auto cfg = rc.transmission;
  if (level >= 0) cfg = at_level(cfg, level);
  cfg.alpha0 = {0.0};
  auto sys = assemble_operators(cfg);
  auto pen = plasmonic_pencil(sys.C, sys.D, count >= 0 ? count : rc.pencil_count);
  write_pencil(out, pen);
  auto m = echo("plasmonic", &f);
  m.emplace_back("level", std::to_string(cfg.level));
  finish_manifest(out + ".manifest", m, t, {out});
  return Ok;
}

int cmd_selftest(std::uint64_t seed) {
  const bool ok = acceptance::report(acceptance::run_all(seed), std::cout);
  return ok ? Ok : NumericalFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-dimensional tree/exterior transmission solver"};
  app.require_subcommand(1);

  std::string config, out, prefix, matrix_out, manufactured;
  int depth = 3, level = 3, modes = 128, p = 2, count = -1, plevel = -1;
  double radius = 1;
  bool truncated = false, allow_large = false;
  std::uint64_t seed = 12345;

  auto* validate = app.add_subcommand("validate", "check tree parameters, print sigma and r");
  validate->add_option("--config", config)->required();

  auto* tree = app.add_subcommand("tree-dtn", "dump the tree DtN Galerkin matrix");
  tree->add_option("--config", config)->required();
  tree->add_option("--depth", depth, "level N of V_N")->required();
  tree->add_option("--out", out)->required();
  tree->add_flag("--truncated", truncated, "plain truncation instead of condensation");
  tree->add_flag("--allow-large", allow_large);

  auto* ext = app.add_subcommand("exterior-dtn", "dump the exterior DtN symbol (and Galerkin matrix)");
  ext->add_option("--radius", radius)->required();
  ext->add_option("--level", level)->required();
  ext->add_option("--modes", modes)->required();
  ext->add_option("--out", out)->required();
  ext->add_option("--matrix-out", matrix_out);
  ext->add_option("--p", p)->check(CLI::Range(2, 64));
  ext->add_flag("--allow-large", allow_large);

  auto* trans = app.add_subcommand("transmission", "solve the coupled problem");
  trans->add_option("--config", config)->required();
  trans->add_option("--out-prefix", prefix, "defaults to <run.output_dir>/");

  auto* conv = app.add_subcommand("convergence", "convergence study over transmission.levels");
  conv->add_option("--config", config)->required();
  conv->add_option("--out", out, "defaults to <run.output_dir>/convergence.csv");
  conv->add_option("--manufactured", manufactured, "cos: injected data for g* = cos theta");

  auto* plas = app.add_subcommand("plasmonic", "generalized eigenvalues of C g = alpha D g");
  plas->add_option("--config", config)->required();
  plas->add_option("--out", out, "defaults to <run.output_dir>/pencil.csv");
  plas->add_option("--level", plevel);
  plas->add_option("--count", count);

  auto* self = app.add_subcommand("selftest", "run the acceptance suite");
  self->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? Ok : ValidationFailure;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*tree) return cmd_tree_dtn(config, depth, out, truncated, allow_large);
    if (*ext) return cmd_exterior_dtn(radius, level, modes, out, matrix_out, p, allow_large);
    if (*trans) return cmd_transmission(config, prefix);
    if (*conv) return cmd_convergence(config, out, manufactured);
    if (*plas) return cmd_plasmonic(config, out, plevel, count);
    if (*self) return cmd_selftest(seed);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ValidationFailure;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return NumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return NumericalFailure;
  }
  return Ok;
}
