#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace mixdim {

// Edge e_{n,k} of the p-adic tree; (0,0) is the root edge.
struct EdgeRef {
  int n = 0;
  std::int64_t k = 0;

  EdgeRef parent(int p) const { return {n - 1, k / p}; }
  EdgeRef child(int p, int j) const { return {n + 1, k * p + j}; }
  auto operator<=>(const EdgeRef&) const = default;
};

inline std::int64_t ipow(std::int64_t base, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (r > std::numeric_limits<std::int64_t>::max() / std::max<std::int64_t>(base, 1))
      throw TooLarge("integer power overflow");
    r *= base;
  }
  return r;
}

struct TreeParams {
  int p = 2;
  double ell = 0.5;
  double omega = 0.4;
  double L0 = 1.0;
  double omega0 = 1.0;
  int N1 = 0;
  std::map<EdgeRef, double> length_overrides;
  std::map<EdgeRef, double> weight_overrides;

  double length(EdgeRef e) const {
    if (e.n < N1)
      if (auto it = length_overrides.find(e); it != length_overrides.end()) return it->second;
    return L0 * std::pow(ell, e.n);
  }
  double weight(EdgeRef e) const {
    if (e.n < N1)
      if (auto it = weight_overrides.find(e); it != weight_overrides.end()) return it->second;
    return omega0 * std::pow(omega, e.n);
  }
  bool is_geometric() const { return length_overrides.empty() && weight_overrides.empty(); }

  // r = ell / (p omega), the per-generation flux attenuation of the radial solution.
  double r() const { return ell / (p * omega); }
  // sigma = (1 - (ln ell - ln omega)/ln p) / 2; undefined for p = 1.
  double sigma() const {
    if (p < 2) return std::numeric_limits<double>::quiet_NaN();
    return 0.5 * (1.0 - (std::log(ell) - std::log(omega)) / std::log(double(p)));
  }

  TreeParams with_weights_scaled(double s) const {
    TreeParams q = *this;
    q.omega0 *= s;
    for (auto& [e, w] : q.weight_overrides) w *= s;
    return q;
  }
};

struct ConditionCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  double sigma = 0;
  double r = 0;
  double min_C = 1;
  bool oracle_only = false;
  std::vector<ConditionCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const ConditionCheck* first_failure() const {
    for (const auto& c : checks)
      if (!c.passed) return &c;
    return nullptr;
  }
};

inline ValidationReport validate_params(const TreeParams& t) {
  auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0))
      throw NonPositiveParameter(std::string(name) + " must be finite and > 0");
  };
  if (t.p < 1) throw NonPositiveParameter("p must be >= 1");
  if (t.N1 < 0) throw NonPositiveParameter("N1 must be >= 0");
  positive(t.ell, "ell");
  positive(t.omega, "omega");
  positive(t.L0, "L0");
  positive(t.omega0, "omega0");
  for (const auto& [e, v] : t.length_overrides) positive(v, "override length");
  for (const auto& [e, v] : t.weight_overrides) positive(v, "override weight");

  ValidationReport rep;
  rep.r = t.r();
  rep.sigma = t.sigma();
  rep.oracle_only = t.p == 1;

  auto add = [&](std::string name, bool ok, std::string detail) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };
  auto fmt = [](double a) {
    std::ostringstream os;
    os.precision(6);
    os << a;
    return os.str();
  };

  add("ell < 1", t.ell < 1, "ell = " + fmt(t.ell));
  add("ell < omega*p", t.ell < t.omega * t.p,
      "omega*p = " + fmt(t.omega * t.p) + ", ell = " + fmt(t.ell));
  add("omega*p < 1/ell", t.omega * t.p < 1 / t.ell,
      "omega*p = " + fmt(t.omega * t.p) + ", 1/ell = " + fmt(1 / t.ell));
  if (!rep.oracle_only)
    add("sigma*d < 1/2", rep.sigma < 0.5, "sigma = " + fmt(rep.sigma));

  bool overrides_ok = true;
  std::string bad;
  double C = std::max({1.0, t.L0, 1 / t.L0, t.omega0, 1 / t.omega0});
  auto scan = [&](const std::map<EdgeRef, double>& tab, double ratio) {
    for (const auto& [e, v] : tab) {
      if (e.n >= t.N1 || e.n < 0 || e.k < 0 || e.k >= ipow(t.p, e.n)) {
        overrides_ok = false;
        bad = "(" + std::to_string(e.n) + "," + std::to_string(e.k) + ")";
        continue;
      }
      double q = v / std::pow(ratio, e.n);
      C = std::max({C, q, 1 / q});
    }
  };
  scan(t.length_overrides, t.ell);
  scan(t.weight_overrides, t.omega);
  add("overrides below N1", overrides_ok, overrides_ok ? "" : "offending edge " + bad);
  rep.min_C = C;
  return rep;
}

inline ValidationReport require_valid(const TreeParams& t) {
  auto rep = validate_params(t);
  if (const auto* f = rep.first_failure())
    throw StructuralConditionViolated(f->name + " violated (" + f->detail + ")");
  return rep;
}

enum class TreeKind { Truncated, Condensed };

// Materialized finite section of the tree, edges stored generation by generation.
class FiniteTree {
 public:
  static constexpr std::int64_t max_edges = std::int64_t(1) << 26;

  FiniteTree(TreeParams params, int depth, TreeKind kind)
      : params_(std::move(params)), depth_(depth), kind_(kind) {
    if (depth < 0) throw NonPositiveParameter("depth must be >= 0");
    const int p = params_.p;
    offsets_.resize(depth + 2);
    offsets_[0] = 0;
    for (int n = 0; n <= depth; ++n) {
      offsets_[n + 1] = offsets_[n] + ipow(p, n);
      if (offsets_[n + 1] > max_edges) throw TooLarge("tree has too many edges");
    }
    const auto E = offsets_[depth + 1];
    length_.resize(E);
    weight_.resize(E);
    far_.resize(E);
    const double leaf_scale = kind == TreeKind::Condensed ? 1.0 / (1.0 - params_.r()) : 1.0;
    for (int n = 0; n <= depth; ++n) {
      const auto cnt = ipow(p, n);
      for (std::int64_t k = 0; k < cnt; ++k) {
        const auto i = offsets_[n] + k;
        const EdgeRef e{n, k};
        length_[i] = params_.length(e) * (n == depth ? leaf_scale : 1.0);
        weight_[i] = params_.weight(e);
        far_[i] = length_[i] + (n == 0 ? 0.0 : far_[parent(i)]);
      }
    }
  }

  const TreeParams& params() const { return params_; }
  int p() const { return params_.p; }
  int depth() const { return depth_; }
  TreeKind kind() const { return kind_; }

  std::int64_t num_edges() const { return offsets_.back(); }
  std::int64_t num_leaves() const { return offsets_[depth_ + 1] - offsets_[depth_]; }
  std::int64_t offset(int n) const { return offsets_[n]; }
  std::int64_t index(EdgeRef e) const { return offsets_[e.n] + e.k; }
  EdgeRef ref(std::int64_t i) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
    int n = static_cast<int>(it - offsets_.begin()) - 1;
    return {n, i - offsets_[n]};
  }
  int generation(std::int64_t i) const { return ref(i).n; }
  std::int64_t parent(std::int64_t i) const {
    auto e = ref(i);
    return index(e.parent(p()));
  }
  std::int64_t first_child(std::int64_t i) const {
    auto e = ref(i);
    return offsets_[e.n + 1] + e.k * p();
  }
  bool is_leaf(std::int64_t i) const { return i >= offsets_[depth_]; }
  std::int64_t leaf_edge(std::int64_t K) const { return offsets_[depth_] + K; }

  double length(std::int64_t i) const { return length_[i]; }
  double weight(std::int64_t i) const { return weight_[i]; }
  // Root distance L_{n,k} of the far endpoint of edge i.
  double root_distance(std::int64_t i) const { return far_[i]; }

  double total_measure() const {
    double s = 0;
    for (std::int64_t i = 0; i < num_edges(); ++i) s += length_[i] * weight_[i];
    return s;
  }

 private:
  TreeParams params_;
  int depth_;
  TreeKind kind_;
  std::vector<std::int64_t> offsets_;
  std::vector<double> length_, weight_, far_;
};

using TreePtr = std::shared_ptr<const FiniteTree>;

inline TreePtr build_truncated(const TreeParams& params, int N) {
  require_valid(params);
  return std::make_shared<const FiniteTree>(params, N, TreeKind::Truncated);
}

// Depth N+1 with leaf edges stretched by 1/(1-r).
inline TreePtr build_condensed(const TreeParams& params, int N) {
  require_valid(params);
  if (N < params.N1)
    throw CondensationBelowGeometricGeneration("N = " + std::to_string(N) +
                                               " < N1 = " + std::to_string(params.N1));
  return std::make_shared<const FiniteTree>(params, N + 1, TreeKind::Condensed);
}

}  // namespace mixdim
