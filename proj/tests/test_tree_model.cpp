#include <gtest/gtest.h>

#include <cmath>

#include "mixdim/tree_model.hpp"

using namespace mixdim;

namespace {
TreeParams reference() { return TreeParams{}; }  // p=2, ell=0.5, omega=0.4, L0=omega0=1
}  // namespace

TEST(TreeModel, ReferenceParametersPass) {
  auto rep = validate_params(reference());
  EXPECT_TRUE(rep.passed());
  // sigma from the log formula evaluated independently
  const double sigma = 0.5 * (1 - std::log(0.5 / 0.4) / std::log(2.0));
  EXPECT_NEAR(rep.sigma, sigma, 1e-15);
  EXPECT_NEAR(rep.sigma, 0.33904, 5e-6);
  EXPECT_DOUBLE_EQ(rep.r, 0.625);
  EXPECT_DOUBLE_EQ(rep.min_C, 1.0);
}

TEST(TreeModel, WeightRatioTooSmallFails) {
  auto t = reference();
  t.omega = 0.2;
  auto rep = validate_params(t);
  ASSERT_FALSE(rep.passed());
  EXPECT_EQ(rep.first_failure()->name, "ell < omega*p");
  EXPECT_THROW(require_valid(t), StructuralConditionViolated);
}

TEST(TreeModel, SigmaHalfFails) {
  auto t = reference();
  t.ell = t.omega = 0.9;
  auto rep = validate_params(t);
  ASSERT_FALSE(rep.passed());
  bool sigma_failed = false;
  for (const auto& c : rep.checks) sigma_failed |= c.name == "sigma*d < 1/2" && !c.passed;
  EXPECT_TRUE(sigma_failed);
  EXPECT_NEAR(rep.sigma, 0.5, 1e-15);
}

TEST(TreeModel, NonPositiveRejected) {
  auto t = reference();
  t.L0 = 0;
  EXPECT_THROW(validate_params(t), NonPositiveParameter);
  t = reference();
  t.omega = -1;
  EXPECT_THROW(validate_params(t), NonPositiveParameter);
}

TEST(TreeModel, PathTreeIsOracleOnly) {
  TreeParams t{1, 0.5, 1.0, 1.0, 1.0, 0, {}, {}};
  auto rep = validate_params(t);
  EXPECT_TRUE(rep.passed());
  EXPECT_TRUE(rep.oracle_only);
}

TEST(TreeModel, OverridesGiveMinimalC) {
  auto t = reference();
  t.N1 = 2;
  t.length_overrides[{1, 0}] = 1.5;  // geometric value 0.5 -> ratio 3
  t.weight_overrides[{0, 0}] = 0.25;  // ratio 1/4 -> 4
  auto rep = validate_params(t);
  EXPECT_TRUE(rep.passed());
  EXPECT_DOUBLE_EQ(rep.min_C, 4.0);
  EXPECT_DOUBLE_EQ(t.length({1, 0}), 1.5);
  EXPECT_DOUBLE_EQ(t.length({1, 1}), 0.5);

  t.length_overrides[{2, 0}] = 1.0;  // not below N1
  EXPECT_FALSE(validate_params(t).passed());
}

TEST(TreeModel, TruncatedCounts) {
  auto tr = build_truncated(reference(), 2);
  EXPECT_EQ(tr->num_edges(), 7);
  EXPECT_EQ(tr->num_leaves(), 4);
  for (std::int64_t K = 0; K < 4; ++K) EXPECT_DOUBLE_EQ(tr->root_distance(tr->leaf_edge(K)), 1.75);
  for (int p = 2; p <= 4; ++p) {
    auto t = reference();
    t.p = p;
    t.omega = 0.6 / p;  // ell < omega p = 0.6 < 2, omega < ell
    for (int N = 0; N <= 5; ++N) {
      std::int64_t expect = 0, pw = 1;
      for (int n = 0; n <= N; ++n, pw *= p) expect += pw;
      EXPECT_EQ(build_truncated(t, N)->num_edges(), expect);
    }
  }
}

TEST(TreeModel, PathLengths) {
  TreeParams t{1, 0.5, 1.0, 1.0, 1.0, 0, {}, {}};
  auto tr = build_truncated(t, 3);
  EXPECT_EQ(tr->num_edges(), 4);
  EXPECT_DOUBLE_EQ(tr->root_distance(3), 1.875);
  auto c = build_condensed(t, 3);
  EXPECT_EQ(c->num_edges(), 5);
  EXPECT_DOUBLE_EQ(c->root_distance(4), 2.0);
}

TEST(TreeModel, CondensedLeafScale) {
  auto t = reference();
  auto tr = build_truncated(t, 4);
  auto c = build_condensed(t, 3);
  ASSERT_EQ(tr->num_edges(), c->num_edges());
  for (std::int64_t i = 0; i < tr->num_edges(); ++i) {
    const double f = c->is_leaf(i) ? 8.0 / 3.0 : 1.0;
    EXPECT_NEAR(c->length(i), f * tr->length(i), 1e-15);
    EXPECT_DOUBLE_EQ(c->weight(i), tr->weight(i));
  }
  // weak attenuation (r small needs large p since omega < ell): scale close to one
  t.p = 64;
  t.ell = 0.05;
  t.omega = 0.04;
  auto ct = build_condensed(t, 0);
  const double r = 0.05 / (64 * 0.04);
  EXPECT_NEAR(ct->length(ct->leaf_edge(0)) / 0.05, 1 / (1 - r), 1e-14);
  EXPECT_LT(ct->length(ct->leaf_edge(0)) / 0.05, 1.02);
}

TEST(TreeModel, CondensationNeedsGeometricGenerations) {
  auto t = reference();
  t.N1 = 3;
  EXPECT_THROW(build_condensed(t, 2), CondensationBelowGeometricGeneration);
  EXPECT_NO_THROW(build_condensed(t, 3));
}

TEST(TreeModelProperty, TotalMeasureIsGeometricSum) {
  for (double omega : {0.3, 0.4, 0.45}) {
    auto t = reference();
    t.omega = omega;
    t.L0 = 1.3;
    t.omega0 = 0.7;
    for (int N = 0; N <= 10; ++N) {
      const double q = t.p * t.ell * omega;
      const double expect = t.L0 * t.omega0 * (1 - std::pow(q, N + 1)) / (1 - q);
      EXPECT_NEAR(build_truncated(t, N)->total_measure(), expect, 1e-12 * expect);
    }
  }
}

TEST(TreeModelProperty, CondensedRootToLeafDistance) {
  auto t = reference();
  t.L0 = 0.8;
  for (int N = 0; N <= 8; ++N) {
    auto c = build_condensed(t, N);
    const double l = t.ell, r = t.r();
    const double expect = t.L0 * (1 - std::pow(l, N + 1)) / (1 - l) + t.L0 * std::pow(l, N + 1) / (1 - r);
    for (std::int64_t K = 0; K < c->num_leaves(); K += 7)
      EXPECT_NEAR(c->root_distance(c->leaf_edge(K)), expect, 1e-13);
  }
}

TEST(TreeModelProperty, ParentChildRoundTrip) {
  auto t = reference();
  t.p = 3;
  t.omega = 0.3;
  auto tr = build_truncated(t, 5);
  for (std::int64_t i = 1; i < tr->num_edges(); ++i) {
    const auto par = tr->parent(i);
    const auto c0 = tr->first_child(par);
    EXPECT_LE(c0, i);
    EXPECT_LT(i, c0 + 3);
    const auto e = tr->ref(i);
    EXPECT_EQ(e.parent(3).child(3, int(e.k % 3)), e);
    EXPECT_EQ(tr->index(e), i);
  }
}
