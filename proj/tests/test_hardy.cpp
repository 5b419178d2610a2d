#include <gtest/gtest.h>

#include <cmath>

#include "hardylab/hardy.hpp"
#include "hardylab/maximal.hpp"

using namespace hardylab;

namespace {

GridDomain make(const std::string& family, int res, const std::string& extra = "") {
  return build_domain(parse_domain_spec("family=" + family + "\nresolution=" + std::to_string(res) + "\n" + extra));
}

// Forward differences, backward on the last cell, written out for 1-D.
double quotient_1d(const GridDomain& dom, const std::vector<double>& d, const std::vector<double>& u, double p) {
  const std::size_t n = u.size();
  const double h = dom.shape().h();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dom.is_inside(i)) num += std::pow(std::abs(u[i]) / d[i], p);
    const double g = i + 1 < n ? (u[i + 1] - u[i]) / h : (u[i] - u[i - 1]) / h;
    den += std::pow(std::abs(g), p);
  }
  return num / den;
}

}  // namespace

TEST(TestFamily, DeterministicAndSeeded) {
  const auto dom = make("half_space", 16, "extent=2");
  const HardyContext ctx(dom);
  const TestFamily a(ctx, 2.0, 10, 7), b(ctx, 2.0, 10, 7), c(ctx, 2.0, 10, 8);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a.label(), "family(n=10,seed=7)");
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.member(i).field.values, b.member(i).field.values);
    differs = differs || a.member(i).field.values != c.member(i).field.values;
  }
  EXPECT_TRUE(differs);
}

TEST(TestFamily, FirstMemberIsTheDistance) {
  const auto dom = make("annulus", 16);
  const HardyContext ctx(dom);
  const TestFamily fam(ctx, 2.0, 6, 1);
  EXPECT_EQ(fam.spec(0).kind, MemberKind::power);
  EXPECT_EQ(fam.spec(0).gamma, 1.0);
  EXPECT_EQ(fam.member(0).field.values, ctx.dist.to_complement.values);
}

TEST(TestFamily, MembersVanishOffTheDomain) {
  const auto dom = make("slit_disk", 16);
  const HardyContext ctx(dom);
  const TestFamily fam(ctx, 2.0, 12, 3);
  for (std::size_t k = 0; k < fam.size(); ++k) {
    const auto m = fam.member(k);
    for (Index i = 0; i < m.field.values.size(); ++i)
      if (!dom.is_inside(i)) EXPECT_EQ(m.field.values[i], 0.0) << m.label;
  }
}

TEST(IntegralQuotient, MatchesHandWrittenSums) {
  const auto dom = make("half_space", 128, "dim=1\ncut=0.25");
  const HardyContext ctx(dom);
  const auto& d = ctx.dist.to_complement.values;
  for (double gamma : {0.5, 1.0, 1.5})
    for (double p : {1.5, 2.0, 3.0}) {
      ScalarField u(dom.shape());
      for (Index i = 0; i < d.size(); ++i) u.values[i] = std::pow(d[i], gamma);
      EXPECT_NEAR(integral_hardy_quotient(ctx, u, p), quotient_1d(dom, d, u.values, p), 1e-10);
    }
}

TEST(IntegralQuotient, ZeroFunctionRejected) {
  const auto dom = make("interval_1d", 32);
  const HardyContext ctx(dom);
  EXPECT_THROW(integral_hardy_quotient(ctx, ScalarField(dom.shape()), 2.0), std::invalid_argument);
}

// Continuum Hardy on a half-line stays below (p/(p-1))^p = 4 at p = 2.
TEST(IntegralQuotient, BelowTheSharpConstant) {
  const auto dom = make("half_space", 4096, "dim=1\ncut=0.0625");
  const HardyContext ctx(dom);
  const TestFamily fam(ctx, 2.0, 12, 1);
  double best = 0.0;
  for (std::size_t k = 0; k < fam.size(); ++k) best = std::max(best, integral_hardy_quotient(ctx, fam.member(k).field, 2.0));
  EXPECT_GT(best, 2.5);
  EXPECT_LT(best, 4.0);
}

TEST(Pointwise, MatchesDirectEvaluation) {
  const auto dom = make("quarter_space", 16, "extent=2");
  const HardyContext ctx(dom);
  const auto u = TestFamily(ctx, 2.0, 6, 2).member(4).field;
  PointwiseOptions po;
  po.L = 2.0;
  const auto res = pointwise_hardy_check(ctx, u, 2.0, po);
  const auto gp_vec = gradient_power(u, 2.0);
  ScalarField gp(dom.shape());
  gp.values = gp_vec;
  const auto g = discrete_gradient(u);
  std::size_t checked = 0;
  for (Index i = 0; i < u.values.size(); i += 2) {
    EXPECT_NEAR(gp.values[i], g.values[i] * g.values[i], 1e-12 * (1 + gp.values[i]));
    if (!dom.is_inside(i)) continue;
    const double d = ctx.dist.to_complement.values[i];
    if (!ball_interior_to_box(dom.shape(), i, 2.0 * d, false)) continue;
    const double m = maximal_at(gp, i, 2.0 * d, 0.0);
    const double want = std::abs(u.values[i]) == 0.0 ? 0.0 : std::abs(u.values[i]) / (d * std::sqrt(m));
    EXPECT_NEAR(res.ratio.values[i], want, 1e-12 * want);
    ++checked;
  }
  EXPECT_GT(checked, 20u);
  EXPECT_EQ(res.flagged, 0u);
}

TEST(Pointwise, HomogeneousAndZero) {
  const auto dom = make("cantor_complement", 16);
  const HardyContext ctx(dom);
  const auto u = TestFamily(ctx, 2.0, 6, 2).member(3).field;
  ScalarField v = u;
  for (double& x : v.values) x *= -0.25;
  const auto a = pointwise_hardy_check(ctx, u, 2.0), b = pointwise_hardy_check(ctx, v, 2.0);
  EXPECT_NEAR(a.sup, b.sup, 1e-12 * a.sup);
  const auto z = pointwise_hardy_check(ctx, ScalarField(dom.shape()), 2.0);
  EXPECT_EQ(z.sup, 0.0);
  EXPECT_EQ(z.flagged, 0u);
}

TEST(Pointwise, FlatFunctionIsFlagged) {
  const auto dom = make("half_space", 16, "extent=2");
  const HardyContext ctx(dom);
  ScalarField u(dom.shape());
  for (Index i = 0; i < u.values.size(); ++i) u.values[i] = dom.is_inside(i) ? 1.0 : 0.0;
  // deep cells see no gradient within L·d when L is small
  PointwiseOptions po;
  po.L = 1.0;
  const auto r = pointwise_hardy_check(ctx, u, 2.0, po);
  EXPECT_GT(r.flagged, 0u);
  EXPECT_TRUE(std::isinf(r.sup));
}

TEST(Fractional, AlphaZeroIsThePointwiseCheckAtL20) {
  const auto dom = make("annulus", 32);
  const HardyContext ctx(dom);
  const auto u = TestFamily(ctx, 2.0, 6, 5).member(5).field;
  PointwiseOptions po;
  po.L = 20.0;
  const auto direct = pointwise_hardy_check(ctx, u, 2.0, po);
  EXPECT_GT(direct.evaluated, 0u);
  EXPECT_EQ(fractional_pointwise_check(ctx, u, 2.0, 0.0).ratio.values, direct.ratio.values);
  EXPECT_EQ(fractional_pointwise_check(ctx, u, 2.0, 0.5).evaluated, direct.evaluated);
}

TEST(Conditions, ZeroFunctionAndExclusions) {
  const auto dom = make("half_space", 16, "extent=2");
  const HardyContext ctx(dom);
  const ScalarField zero(dom.shape());
  Index w = 0;
  while (dom.is_inside(w)) ++w;
  // the corner cell cannot hold a 5B window
  EXPECT_TRUE(condition_b_check(ctx, zero, 2.0, w, 0.25).excluded);
  const Index mid = dom.shape().index({16, 15, 0});
  ASSERT_FALSE(dom.is_inside(mid));
  const auto b = condition_b_check(ctx, zero, 2.0, mid, 0.0625);
  EXPECT_FALSE(b.excluded);
  EXPECT_EQ(b.ratio, 0.0);
  const Index x = dom.shape().index({16, 17, 0});
  ASSERT_TRUE(dom.is_inside(x));
  EXPECT_EQ(condition_c_check(ctx, zero, 2.0, x).ratio, 0.0);
}

TEST(Wannebo, BetaRule) {
  EXPECT_EQ(wannebo_beta(2.0, 8.0), 0.25);
  EXPECT_EQ(wannebo_beta(2.0, 1.0), 0.5);
  EXPECT_NEAR(wannebo_beta(3.0, 100.0), std::sqrt(27.0 / 200.0), 1e-15);
  EXPECT_THROW(wannebo_beta(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(wannebo_beta(2.0, -1.0), std::invalid_argument);
}

TEST(Wannebo, LayersAddUpAndCertify) {
  const auto dom = make("half_space", 32, "extent=2");
  const HardyContext ctx(dom);
  const TestFamily fam(ctx, 2.0, 8, 1);
  const auto rep = hardy_report(ctx, 2.0, fam);
  const auto tr = wannebo_pipeline(ctx, 2.0, rep.condition_b_constant, fam);
  EXPECT_EQ(tr.beta, wannebo_beta(2.0, rep.condition_b_constant));
  EXPECT_TRUE(tr.absorption_closes);
  EXPECT_TRUE(tr.certified);
  EXPECT_NEAR(tr.final_hardy_constant, 2.0 * tr.layered_constant / tr.beta, 1e-12 * tr.final_hardy_constant);
  for (const auto& m : tr.members) {
    EXPECT_LT(m.partition_gap, 1e-10);
    double lhs = 0.0, rhs = 0.0;
    for (const auto& l : m.layers) {
      lhs += l.lhs;
      rhs += l.rhs;
    }
    EXPECT_NEAR(m.layered_constant, tr.beta * lhs / rhs, 1e-12 * m.layered_constant);
    EXPECT_LE(m.quotient, tr.final_hardy_constant);
  }
}

TEST(LevelSet, Constants) {
  EXPECT_DOUBLE_EQ(level_set_l(2.0), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(level_set_C1(2.0, 2), (1.0 / 36.0) / 16.0);
}

TEST(LevelSet, ChainHoldsOnHalfPlane) {
  const auto dom = make("half_space", 16, "extent=10\ncut=6");
  const HardyContext ctx(dom);
  const auto rep = fatness_from_pointwise_experiment(ctx, 2.0, 2.0, 32);
  ASSERT_FALSE(rep.samples.empty());
  std::size_t covered = 0;
  for (const auto& s : rep.samples) {
    EXPECT_GT(s.solved_capacity, 0.0);
    if (s.mu_E == 0.0) {
      // nothing above C₁ near w: the Poincaré branch has to carry it
      EXPECT_TRUE(s.poincare_branch);
      continue;
    }
    ++covered;
    EXPECT_GT(s.implied_lower, 0.0);
    EXPECT_TRUE(s.goal_holds);
  }
  EXPECT_GT(covered, 0u);
}

TEST(HardyReport, DeterministicAcrossThreads) {
  const auto dom = make("punctured_ball", 16);
  const HardyContext ctx(dom);
  const TestFamily fam(ctx, 2.0, 6, 1);
  HardyOptions o;
  const auto a = hardy_report(ctx, 2.0, fam, o);
  o.threads = 3;
  const auto b = hardy_report(ctx, 2.0, fam, o);
  EXPECT_EQ(a.pointwise_constant, b.pointwise_constant);
  EXPECT_EQ(a.condition_b_constant, b.condition_b_constant);
  EXPECT_EQ(a.condition_c_constant, b.condition_c_constant);
  EXPECT_EQ(a.integral_quotient, b.integral_quotient);
  EXPECT_EQ(a.pointwise_argmax_member, b.pointwise_argmax_member);
}
