#include "hardylab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "hardylab/capacity.hpp"
#include "hardylab/content.hpp"
#include "hardylab/fatness.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/harness.hpp"
#include "hardylab/maximal.hpp"
#include "hardylab/serialize.hpp"
#include "util.hpp"

namespace hardylab {

bool VerifyResult::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

namespace {

using detail::Rng;

ScalarField random_field(const GridShape& s, Rng& rng) {
  ScalarField f(s);
  for (double& v : f.values) v = rng.uniform();
  return f;
}

// Every box cell in index order, kept when inside the open ball.
double brute_mean(const ScalarField& f, Index c, double r) {
  const GridShape& s = f.shape;
  const Coord cc = s.coords(c);
  double sum = 0.0;
  std::size_t n = 0;
  for (Index i = 0; i < s.size(); ++i) {
    const Coord q = s.coords(i);
    double sq = 0.0;
    for (int a = 0; a < 3; ++a) sq += double(q[a] - cc[a]) * double(q[a] - cc[a]);
    if (!within_radius(sq, r / s.h(), false)) continue;
    sum += f.values[i];
    ++n;
  }
  return sum / static_cast<double>(n);
}

double brute_maximal(const ScalarField& f, Index c, double cap, double alpha) {
  double best = -1.0;
  for (double r = f.shape.h(); r < cap * (1.0 - 1e-12); r *= 2.0) {
    double v = brute_mean(f, c, r);
    if (alpha != 0.0) v *= std::pow(r, alpha);
    best = std::max(best, v);
  }
  double v = brute_mean(f, c, cap);
  if (alpha != 0.0) v *= std::pow(cap, alpha);
  return std::max(best, v);
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

VerifyResult run_verify(const VerifyOptions& options) {
  VerifyResult res;
  auto check = [&](const std::string& id, const std::function<std::string(bool&)>& body) {
    VerifyCheck c;
    c.id = id;
    try {
      bool ok = true;
      c.detail = body(ok);
      c.passed = ok;
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("exception: ") + e.what();
    }
    res.checks.push_back(std::move(c));
  };
  const int threads = options.threads;

  check("grid_geometry/distance_fields: exact transform equals brute force", [&](bool& ok) {
    Rng rng(detail::mix_seed(options.seed, 1));
    std::size_t bad = 0;
    for (int dim : {1, 2, 3}) {
      const int n = dim == 3 ? 7 : (dim == 2 ? 19 : 41);
      GridShape s(dim, 0.1, {n, dim >= 2 ? n : 1, dim >= 3 ? n : 1}, {0, 0, 0});
      CellMask m(s.size());
      for (auto& x : m) x = rng.uniform() < 0.1 ? 1 : 0;
      m[0] = 1;
      const auto sq = squared_distance_transform(s, m);
      for (Index i = 0; i < s.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        const Coord a = s.coords(i);
        for (Index j = 0; j < s.size(); ++j)
          if (m[j]) {
            const Coord b = s.coords(j);
            double d = 0.0;
            for (int k = 0; k < 3; ++k) d += double(a[k] - b[k]) * double(a[k] - b[k]);
            best = std::min(best, d);
          }
        bad += sq[i] != best;
      }
    }
    ok = bad == 0;
    return std::to_string(bad) + " mismatching cells";
  });

  check("grid_geometry/build_domain: cantor row matches the interval recursion", [&](bool& ok) {
    const auto dom = build_domain(parse_domain_spec("family=cantor_complement\nresolution=81\ndepth=3"));
    const GridShape& s = dom.shape();
    // depth 3, ratio 1/3: the row y = 0 loses every cell meeting one of 8 intervals
    std::vector<std::pair<double, double>> iv{{0, 1}};
    for (int d = 0; d < 3; ++d) {
      std::vector<std::pair<double, double>> next;
      for (auto [a, b] : iv) {
        next.emplace_back(a, a + (b - a) / 3);
        next.emplace_back(b - (b - a) / 3, b);
      }
      iv = next;
    }
    std::size_t bad = 0;
    for (Index i = 0; i < s.size(); ++i) {
      const Point p = s.center(i);
      bool out = false;
      if (std::abs(p[1]) < 0.5 * s.h())
        for (auto [a, b] : iv) out = out || (p[0] + 0.5 * s.h() >= a && p[0] - 0.5 * s.h() <= b);
      bad += dom.is_inside(i) == out;
    }
    ok = bad == 0;
    return std::to_string(bad) + " mismatching cells";
  });

  check("maximal_operators/restricted_maximal: bit-exact against exhaustive search", [&](bool& ok) {
    Rng rng(detail::mix_seed(options.seed, 2));
    GridShape s(2, 1.0 / 16, {16, 16, 1}, {0, 0, 0});
    std::size_t bad = 0;
    for (int trial = 0; trial < 3; ++trial) {
      const ScalarField f = random_field(s, rng);
      for (double alpha : {0.0, 0.5}) {
        for (double cap : {s.h(), 3.0 * s.h(), 0.4}) {
          MaximalQuery q;
          q.field = &f;
          q.uniform_cap = cap;
          q.alpha = alpha;
          q.threads = threads;
          const ScalarField m = restricted_maximal(q);
          for (Index i = 0; i < s.size(); ++i) bad += m.values[i] != brute_maximal(f, i, cap, alpha);
        }
      }
    }
    ok = bad == 0;
    return std::to_string(bad) + " cells differ";
  });

  check("maximal_operators/restricted_maximal: sublinearity on random pairs", [&](bool& ok) {
    Rng rng(detail::mix_seed(options.seed, 3));
    GridShape s(2, 1.0 / 12, {12, 12, 1}, {0, 0, 0});
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      ScalarField f = random_field(s, rng), g = random_field(s, rng), fg(s);
      for (Index i = 0; i < s.size(); ++i) fg.values[i] = f.values[i] + g.values[i];
      const Index c = rng.below(s.size());
      const double cap = 0.5;
      const double lhs = maximal_at(fg, c, cap, 0.0);
      const double rhs = maximal_at(f, c, cap, 0.0) + maximal_at(g, c, cap, 0.0);
      worst = std::max(worst, lhs / rhs);
    }
    ok = worst <= 1.0 + 1e-12;
    return "max M(f+g)/(Mf+Mg) = " + fmt(worst);
  });

  // Only dyadic caps: a general cap ends the ladder early and can lose a rung.
  check("maximal_operators/restricted_maximal: monotone in a dyadic cap", [&](bool& ok) {
    Rng rng(detail::mix_seed(options.seed, 5));
    GridShape s(2, 1.0 / 12, {12, 12, 1}, {0, 0, 0});
    std::size_t bad = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const ScalarField f = random_field(s, rng);
      const Index c = rng.below(s.size());
      double prev = -1.0;
      for (double cap = s.h(); cap <= 1.0; cap *= 2.0) {
        const double v = maximal_at(f, c, cap, 0.0);
        bad += v < prev;
        prev = v;
      }
    }
    ok = bad == 0;
    return std::to_string(bad) + " decreases";
  });

  check("capacity_solver/solve_capacity: annulus cap_2(B(0,1), B(0,2)) within 2% of 2pi/ln2", [&](bool& ok) {
    const int res = 64, K = static_cast<int>(std::lround(2.25 * res));
    GridShape s(2, 1.0 / res, {2 * K + 1, 2 * K + 1, 1}, {-(K + 0.5) / res, -(K + 0.5) / res, 0});
    CellMask all(s.size(), 1);
    const auto r = solve_capacity(ball_condenser(s, all, s.index({K, K, 0}), 1.0, 2.0, 2.0));
    const double exact = 2.0 * std::numbers::pi / std::numbers::ln2;
    const double rel = r.value / exact - 1.0;
    ok = std::abs(rel) <= 0.02;
    return "annulus h=1/64: " + fmt(r.value) + " vs " + fmt(exact) + " (rel " + fmt(rel) + ")";
  });

  check("capacity_solver/solve_capacity: monotone in the plate", [&](bool& ok) {
    GridShape s(2, 1.0 / 16, {33, 33, 1}, {-33.0 / 32, -33.0 / 32, 0});
    const Index c = s.index({16, 16, 0});
    CellMask all(s.size(), 1), half(s.size(), 0);
    for (Index i = 0; i < s.size(); ++i) half[i] = s.center(i)[1] > 0 ? 1 : 0;
    const double a = solve_capacity(ball_condenser(s, half, c, 0.25, 0.5, 2.0)).value;
    const double b = solve_capacity(ball_condenser(s, all, c, 0.25, 0.5, 2.0)).value;
    const double a3 = solve_capacity(ball_condenser(s, half, c, 0.25, 0.5, 3.0)).value;
    const double b3 = solve_capacity(ball_condenser(s, all, c, 0.25, 0.5, 3.0)).value;
    ok = a <= b && a > 0.0 && a3 <= b3 * (1.0 + 1e-9);
    return "half/full p=2: " + fmt(a / b) + ", p=3: " + fmt(a3 / b3);
  });

  check("fatness_profiler/fatness_profile: half-plane complement has a positive floor", [&](bool& ok) {
    const auto dom = build_domain(parse_domain_spec("family=half_space\nresolution=16\nextent=2"));
    FatnessOptions fo;
    fo.max_centers = 8;
    fo.threads = threads;
    const auto prof = fatness_profile(dom, 2.0, fo);
    ok = prof.c0_estimate > 0.3 && prof.c0_estimate <= 1.0 + 1e-9;
    return "c0 = " + fmt(prof.c0_estimate);
  });

  const auto hs = build_domain(parse_domain_spec("family=half_space\nresolution=24\nextent=2"));
  const HardyContext hctx(hs);
  const TestFamily hfam(hctx, 2.0, 8, options.seed);

  check("hardy_lab/pointwise_hardy_check: homogeneity under u -> c u", [&](bool& ok) {
    double worst = 0.0;
    for (std::size_t k = 0; k < hfam.size(); ++k) {
      const auto m = hfam.member(k);
      ScalarField scaled = m.field;
      for (double& v : scaled.values) v *= -3.5;
      const double a = pointwise_hardy_check(hctx, m.field, 2.0).sup;
      const double b = pointwise_hardy_check(hctx, scaled, 2.0).sup;
      const double qa = integral_hardy_quotient(hctx, m.field, 2.0);
      const double qb = integral_hardy_quotient(hctx, scaled, 2.0);
      worst = std::max({worst, std::abs(a - b) / std::max(a, 1e-300), std::abs(qa - qb) / qa});
    }
    ok = worst <= 1e-12;
    return "max relative change " + fmt(worst);
  });

  check("hardy_lab/fractional_pointwise_check: alpha = 0 reproduces the L = 20 check", [&](bool& ok) {
    std::size_t bad = 0;
    for (std::size_t k = 0; k < hfam.size(); ++k) {
      const auto m = hfam.member(k);
      PointwiseOptions po;
      po.L = 20.0;
      const auto a = pointwise_hardy_check(hctx, m.field, 2.0, po);
      const auto b = fractional_pointwise_check(hctx, m.field, 2.0, 0.0);
      bad += a.ratio.values != b.ratio.values || a.sup != b.sup;
    }
    ok = bad == 0;
    return std::to_string(bad) + " members differ";
  });

  check("hardy_lab/wannebo_pipeline: beta rule, partition additivity, certified constant", [&](bool& ok) {
    const double beta = wannebo_beta(2.0, 8.0);
    const auto tr = wannebo_pipeline(hctx, 2.0, 8.0, hfam, threads);
    double gap = 0.0;
    for (const auto& m : tr.members) gap = std::max(gap, m.partition_gap);
    bool refused = false;
    try {
      wannebo_beta(1.0, 8.0);
    } catch (const std::invalid_argument&) {
      refused = true;
    }
    ok = beta == 0.25 && gap <= 1e-10 && tr.certified && tr.absorption_closes && refused;
    return "beta " + fmt(beta) + ", gap " + fmt(gap) + ", final " + fmt(tr.final_hardy_constant) + " vs max quotient " +
           fmt(tr.max_quotient);
  });

  check("hardy_lab/integral_hardy_quotient: u = d on the unit interval gives 1", [&](bool& ok) {
    const auto dom = build_domain(parse_domain_spec("family=interval_1d\nresolution=64"));
    const HardyContext ctx(dom);
    ScalarField u = ctx.dist.to_complement;
    const auto& d = ctx.dist.to_complement.values;
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < d.size(); ++i) num += dom.is_inside(i) ? 1.0 : 0.0;
    for (double g : gradient_power(u, 2.0)) den += g;
    const double q = integral_hardy_quotient(ctx, u, 2.0);
    ok = std::abs(q - num / den) <= 1e-12 * q && std::abs(q - 1.0) < 0.05;
    return "quotient " + fmt(q);
  });

  check("content_estimator/estimate_content: exact <= greedy <= exact (1 + ln|E|)", [&](bool& ok) {
    Rng rng(detail::mix_seed(options.seed, 4));
    GridShape s(2, 1.0 / 16, {16, 16, 1}, {0, 0, 0});
    double worst = 0.0;
    bool order = true, covers = true;
    for (int trial = 0; trial < 6; ++trial) {
      std::vector<Index> E;
      const std::size_t n = 4 + rng.below(16);
      while (E.size() < n) E.push_back(rng.below(s.size()));
      std::sort(E.begin(), E.end());
      E.erase(std::unique(E.begin(), E.end()), E.end());
      const auto est = estimate_content(s, E, 1.0, 4.0 * s.h());
      covers = covers && cover_covers(s, est.witness, E);
      if (!est.lower_value) continue;
      order = order && *est.lower_value <= est.upper_value * (1.0 + 1e-12);
      worst = std::max(worst, est.upper_value / *est.lower_value / (1.0 + std::log(double(E.size()))));
    }
    ok = order && covers && worst <= 1.0 + 1e-12;
    return "worst greedy/(exact (1 + ln|E|)) = " + fmt(worst);
  });

  check("content_estimator/estimate_content: a point has vanishing codimension-1 content", [&](bool& ok) {
    std::vector<double> v;
    for (int res : {16, 32, 64}) {
      GridShape s(2, 1.0 / res, {res, res, 1}, {0, 0, 0});
      v.push_back(estimate_content(s, {s.index({res / 2, res / 2, 0})}, 1.0, 0.25).upper_value);
    }
    ok = v[1] < v[0] && v[2] < v[1];
    return fmt(v[0]) + " " + fmt(v[1]) + " " + fmt(v[2]);
  });

  check("experiment_harness/classify_trend: threshold rules", [&](bool& ok) {
    Thresholds th;
    ok = classify_trend({1.0, 1.5, 1.2}, th) == Trend::stable && classify_trend({1.0, 2.5, 6.0}, th) == Trend::diverging &&
         classify_trend({1.0, 0.4, 0.1}, th) == Trend::decaying && classify_trend({1.0, 3.0}, th) == Trend::drifting &&
         classify_trend({1.0}, th) == Trend::undetermined;
    return "";
  });

  check("experiment_harness/run: miniature sweep is coherent and deterministic", [&](bool& ok) {
    ExperimentConfig c = parse_config(R"({"domains": [{"family": "half_space", "params": {"extent": 2}}, "punctured_ball"],
      "resolutions": [16, 24], "family_size": 6, "max_centers": 6, "density_L": 1})");
    c.seed = options.seed;
    c.threads = threads;
    const auto a = run_experiment(c, false);
    c.threads = 1;
    const auto b = run_experiment(c, false);
    const bool same = summary_csv(a) == summary_csv(b) && report_json(a) == report_json(b);
    ok = same && a.anomalies.empty() && a.exit_code() == 0;
    std::string out = same ? "deterministic" : "outputs differ between thread counts";
    for (const auto& x : a.anomalies) out += "; anomaly " + x;
    for (const auto& x : a.errors) out += "; error " + x;
    for (const auto& x : a.violations) out += "; violation " + x;
    return out;
  });

  return res;
}

}  // namespace hardylab
