#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "polynomial.hpp"
#include "tree_model.hpp"

namespace mixdim {

// Piecewise polynomial on a finite tree. Edge i carries a polynomial in the
// local variable s = t - (L_i - l_i) in [0, l_i], s = 0 at the root-side end.
template <class Scalar = double>
class TreeFunction {
 public:
  using Poly = Polynomial<Scalar>;

  explicit TreeFunction(TreePtr tree)
      : tree_(std::move(tree)), edges_(static_cast<std::size_t>(tree_->num_edges())) {}

  const FiniteTree& tree() const { return *tree_; }
  const TreePtr& tree_ptr() const { return tree_; }
  std::size_t num_edges() const { return edges_.size(); }

  Poly& edge(std::int64_t i) { return edges_[static_cast<std::size_t>(i)]; }
  const Poly& edge(std::int64_t i) const { return edges_[static_cast<std::size_t>(i)]; }

  Scalar value(std::int64_t i, double s) const { return edge(i)(s); }
  Scalar start_value(std::int64_t i) const { return edge(i)(0.0); }
  Scalar end_value(std::int64_t i) const { return edge(i)(tree_->length(i)); }
  Scalar start_slope(std::int64_t i) const { return edge(i).derivative()(0.0); }
  Scalar end_slope(std::int64_t i) const { return edge(i).derivative()(tree_->length(i)); }

  Scalar root_value() const { return start_value(0); }
  Scalar leaf_value(std::int64_t K) const { return end_value(tree_->leaf_edge(K)); }

  int degree() const {
    int d = -1;
    for (const auto& e : edges_) d = std::max(d, e.degree());
    return d;
  }

  // Largest mismatch between a parent's end value and its children's start values.
  double continuity_defect() const {
    double m = 0;
    const int p = tree_->p();
    for (std::int64_t i = 0; i < tree_->num_edges(); ++i) {
      if (tree_->is_leaf(i)) continue;
      const Scalar v = end_value(i);
      const auto c0 = tree_->first_child(i);
      for (int j = 0; j < p; ++j) m = std::max(m, double(std::abs(v - start_value(c0 + j))));
    }
    return m;
  }

  double max_abs_coeff() const {
    double m = 0;
    for (const auto& e : edges_) m = std::max(m, e.max_abs_coeff());
    return m;
  }

  TreeFunction& operator+=(const TreeFunction& o) {
    for (std::size_t i = 0; i < edges_.size(); ++i) edges_[i] += o.edges_[i];
    return *this;
  }
  TreeFunction& operator-=(const TreeFunction& o) {
    for (std::size_t i = 0; i < edges_.size(); ++i) edges_[i] -= o.edges_[i];
    return *this;
  }
  TreeFunction& operator*=(Scalar a) {
    for (auto& e : edges_) e *= a;
    return *this;
  }
  friend TreeFunction operator+(TreeFunction a, const TreeFunction& b) { return a += b; }
  friend TreeFunction operator-(TreeFunction a, const TreeFunction& b) { return a -= b; }
  friend TreeFunction operator*(Scalar s, TreeFunction a) { return a *= s; }

 private:
  TreePtr tree_;
  std::vector<Poly> edges_;
};

// Edgewise polynomial given in the normalized coordinate x = s / l in [0,1].
template <class Scalar>
TreeFunction<Scalar> from_normalized(TreePtr tree, const std::vector<Scalar>& coeffs,
                                     int max_generation) {
  TreeFunction<Scalar> f(tree);
  for (std::int64_t i = 0; i < tree->num_edges(); ++i) {
    if (tree->generation(i) > max_generation) continue;
    std::vector<Scalar> c(coeffs.size());
    const double l = tree->length(i);
    for (std::size_t j = 0; j < coeffs.size(); ++j) c[j] = coeffs[j] / std::pow(l, double(j));
    f.edge(i) = Polynomial<Scalar>(std::move(c));
  }
  return f;
}

// Quadratic root bump (1 - s/l00)^2 on the root edge, zero elsewhere.
template <class Scalar = double>
TreeFunction<Scalar> root_bump(TreePtr tree) {
  TreeFunction<Scalar> u(tree);
  const double l = tree->length(0);
  u.edge(0) = Polynomial<Scalar>({Scalar(1), Scalar(-2.0 / l), Scalar(1.0 / (l * l))});
  return u;
}

}  // namespace mixdim
