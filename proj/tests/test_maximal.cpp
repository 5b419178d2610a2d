#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hardylab/maximal.hpp"

using namespace hardylab;

namespace {

ScalarField random_field(const GridShape& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ScalarField f(s);
  for (double& v : f.values) v = U(rng);
  return f;
}

// Exhaustive: every box cell in index order, membership by exact integer
// comparison against (r/h)², the ladder rebuilt by hand.
double oracle(const ScalarField& f, Index c, double cap, double alpha) {
  const GridShape& s = f.shape;
  const Coord cc = s.coords(c);
  std::vector<double> radii;
  for (int k = 0; std::ldexp(s.h(), k) < cap * (1 - 1e-12); ++k) radii.push_back(std::ldexp(s.h(), k));
  radii.push_back(cap);
  double best = -1.0;
  for (double r : radii) {
    const double rc = r / s.h();
    double sum = 0.0;
    std::size_t n = 0;
    for (Index i = 0; i < s.size(); ++i) {
      const Coord q = s.coords(i);
      const long sq = long(q[0] - cc[0]) * (q[0] - cc[0]) + long(q[1] - cc[1]) * (q[1] - cc[1]);
      if (double(sq) >= rc * rc - 1e-9) continue;
      sum += f.values[i];
      ++n;
    }
    double v = sum / double(n);
    if (alpha != 0.0) v *= std::pow(r, alpha);
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

TEST(RadiusLadder, DyadicThenCap) {
  EXPECT_EQ(radius_ladder(0.125, 0.125), std::vector<double>({0.125}));
  EXPECT_EQ(radius_ladder(0.125, 0.5), std::vector<double>({0.125, 0.25, 0.5}));
  EXPECT_EQ(radius_ladder(0.125, 0.4), std::vector<double>({0.125, 0.25, 0.4}));
  EXPECT_THROW(radius_ladder(0.125, 0.1), std::invalid_argument);
}

TEST(RestrictedMaximal, BitExactAgainstExhaustiveSearch) {
  std::mt19937_64 rng(3);
  GridShape s(2, 1.0 / 32, {32, 32, 1}, {0, 0, 0});
  for (int trial = 0; trial < 2; ++trial) {
    const ScalarField f = random_field(s, rng);
    for (double alpha : {0.0, 0.75})
      for (double cap : {1.0 / 32, 5.0 / 32, 0.5}) {
        MaximalQuery q;
        q.field = &f;
        q.uniform_cap = cap;
        q.alpha = alpha;
        const auto m = restricted_maximal(q);
        for (Index i = 0; i < s.size(); i += 7) ASSERT_EQ(m.values[i], oracle(f, i, cap, alpha)) << i;
      }
  }
}

TEST(RestrictedMaximal, PerCellCapsAndEvaluationMask) {
  std::mt19937_64 rng(4);
  GridShape s(2, 0.0625, {16, 16, 1}, {0, 0, 0});
  const ScalarField f = random_field(s, rng);
  ScalarField caps(s);
  CellMask eval(s.size(), 0);
  for (Index i = 0; i < s.size(); ++i) {
    caps.values[i] = s.h() * double(1 + i % 5);
    eval[i] = i % 3 == 0;
  }
  MaximalQuery q;
  q.field = &f;
  q.cap_field = &caps;
  q.evaluate = &eval;
  q.threads = 2;
  const auto m = restricted_maximal(q);
  for (Index i = 0; i < s.size(); ++i) {
    if (!eval[i])
      EXPECT_EQ(m.values[i], 0.0);
    else
      EXPECT_EQ(m.values[i], maximal_at(f, i, caps.values[i], 0.0));
  }
}

TEST(RestrictedMaximal, Sublinear) {
  std::mt19937_64 rng(8);
  GridShape s(2, 1.0 / 16, {16, 16, 1}, {0, 0, 0});
  for (int k = 0; k < 100; ++k) {
    const ScalarField f = random_field(s, rng), g = random_field(s, rng);
    ScalarField fg(s);
    for (Index i = 0; i < s.size(); ++i) fg.values[i] = f.values[i] + g.values[i];
    const Index c = rng() % s.size();
    const double cap = 0.5;
    EXPECT_LE(maximal_at(fg, c, cap, 0.0), (maximal_at(f, c, cap, 0.0) + maximal_at(g, c, cap, 0.0)) * (1 + 1e-14));
  }
}

TEST(RestrictedMaximal, PositivelyHomogeneous) {
  std::mt19937_64 rng(9);
  GridShape s(2, 1.0 / 16, {16, 16, 1}, {0, 0, 0});
  const ScalarField f = random_field(s, rng);
  ScalarField f4(s);
  for (Index i = 0; i < s.size(); ++i) f4.values[i] = 4.0 * f.values[i];
  for (Index c = 0; c < s.size(); c += 11) EXPECT_EQ(maximal_at(f4, c, 0.3, 0.5), 4.0 * maximal_at(f, c, 0.3, 0.5));
}

TEST(RestrictedMaximal, MonotoneAlongDyadicCaps) {
  std::mt19937_64 rng(10);
  GridShape s(2, 1.0 / 16, {16, 16, 1}, {0, 0, 0});
  for (int k = 0; k < 100; ++k) {
    const ScalarField f = random_field(s, rng);
    const Index c = rng() % s.size();
    double prev = 0.0;
    for (double cap = s.h(); cap <= 1.0; cap *= 2.0) {
      const double v = maximal_at(f, c, cap, 0.0);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(RestrictedMaximal, ArgmaxRadiusIsOnTheLadder) {
  std::mt19937_64 rng(12);
  GridShape s(2, 1.0 / 16, {16, 16, 1}, {0, 0, 0});
  const ScalarField f = random_field(s, rng);
  double r = 0.0;
  const double v = maximal_at(f, 100, 0.3, 0.0, &r);
  const auto ladder = radius_ladder(s.h(), 0.3);
  EXPECT_NE(std::find(ladder.begin(), ladder.end(), r), ladder.end());
  EXPECT_EQ(v, ball_mean(f, 100, r));
}

TEST(RestrictedMaximal, LadderFaultBreaksSublinearity) {
  std::mt19937_64 rng(13);
  GridShape s(2, 1.0 / 16, {16, 16, 1}, {0, 0, 0});
  testing_hooks::set_maximal_ladder_fault(true);
  bool broken = false;
  for (int k = 0; k < 50 && !broken; ++k) {
    const ScalarField f = random_field(s, rng), g = random_field(s, rng);
    ScalarField fg(s);
    for (Index i = 0; i < s.size(); ++i) fg.values[i] = f.values[i] + g.values[i];
    const Index c = rng() % s.size();
    broken = maximal_at(fg, c, 0.5, 0.0) > maximal_at(f, c, 0.5, 0.0) + maximal_at(g, c, 0.5, 0.0);
  }
  testing_hooks::set_maximal_ladder_fault(false);
  EXPECT_TRUE(broken);
}

TEST(Telescoping, AffineFunctionHasBoundedRatio) {
  GridShape s(2, 1.0 / 32, {32, 32, 1}, {0, 0, 0});
  ScalarField u(s);
  for (Index i = 0; i < s.size(); ++i) u.values[i] = 2.0 * s.center(i)[0] + s.center(i)[1];
  const auto t = telescoping_check(u, s.index({16, 16, 0}), 0.25, 2.0);
  EXPECT_FALSE(t.violation);
  EXPECT_LT(t.ratio, 1.0);
  ScalarField c(s, 3.0);
  EXPECT_EQ(telescoping_check(c, s.index({16, 16, 0}), 0.25, 2.0).ratio, 0.0);
}
