#include "hardylab/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hardylab/fatness.hpp"
#include "hardylab/maximal.hpp"
#include "util.hpp"

namespace hardylab {

std::vector<double> gradient_power(const ScalarField& u, double p) {
  GradientField g = discrete_gradient(u);
  for (double& x : g.values) x = p == 2.0 ? x * x : std::pow(x, p);
  return std::move(g.values);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum CellStatus : std::uint8_t { skipped, evaluated, excluded, flagged };

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  k = std::clamp<std::size_t>(k, 1, v.size()) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

double ball_sum(const GridShape& s, const std::vector<double>& f, Index c, double r) {
  double acc = 0.0;
  for (Index i : ball_cells_at(s, c, r, false)) acc += f[i];
  return acc;
}

}  // namespace

PointwiseResult pointwise_hardy_check(const HardyContext& ctx, const ScalarField& u, double p,
                                      const PointwiseOptions& opt) {
  if (!(opt.L >= 1.0)) throw std::invalid_argument("pointwise_hardy_check: L must be at least 1");
  if (!(opt.alpha >= 0.0 && opt.alpha < p)) throw std::invalid_argument("fractional check: need 0 <= alpha < p");
  const GridShape& s = ctx.shape();
  if (!(u.shape == s)) throw std::invalid_argument("pointwise_hardy_check: field on a different grid");
  ScalarField gp(s);
  gp.values = gradient_power(u, p);
  const auto& d = opt.boundary_distance ? ctx.dist.to_boundary.values : ctx.dist.to_complement.values;
  const double e = 1.0 - opt.alpha / p;

  PointwiseResult out;
  out.ratio = ScalarField(s);
  std::vector<std::uint8_t> status(s.size(), skipped);
  detail::parallel_for(s.size(), opt.threads, [&](Index i) {
    if (!ctx.domain->is_inside(i)) return;
    const double num = std::abs(u.values[i]);
    if (num == 0.0) {
      status[i] = evaluated;
      return;
    }
    const double cap = opt.L * d[i];
    if (!ball_interior_to_box(s, i, cap, false)) {
      status[i] = excluded;
      return;
    }
    const double m = maximal_at(gp, i, cap, opt.alpha);
    const double den = std::pow(d[i], e) * std::pow(m, 1.0 / p);
    if (!(den > 0.0)) {
      status[i] = flagged;
      return;
    }
    out.ratio.values[i] = num / den;
    status[i] = evaluated;
  });

  std::vector<double> seen;
  for (Index i = 0; i < s.size(); ++i) {
    switch (status[i]) {
      case evaluated:
        ++out.evaluated;
        seen.push_back(out.ratio.values[i]);
        if (out.ratio.values[i] > out.sup) {
          out.sup = out.ratio.values[i];
          out.argmax = i;
        }
        break;
      case excluded:
        ++out.excluded;
        break;
      case flagged:
        ++out.flagged;
        break;
      default:
        break;
    }
  }
  out.p999 = percentile(std::move(seen), 0.999);
  if (out.flagged > 0) out.sup = kInf;
  return out;
}

PointwiseResult fractional_pointwise_check(const HardyContext& ctx, const ScalarField& u, double p, double alpha,
                                           double L, int threads) {
  if (!(alpha >= 0.0 && alpha < p)) throw std::invalid_argument("fractional check: need 0 <= alpha < p");
  PointwiseOptions opt;
  opt.L = L;
  opt.alpha = alpha;
  opt.threads = threads;
  return pointwise_hardy_check(ctx, u, p, opt);
}

RatioResult condition_b_check(const HardyContext& ctx, const ScalarField& u, double p, Index w, double r) {
  return condition_b_check(ctx, u, gradient_power(u, p), p, w, r);
}

RatioResult condition_b_check(const HardyContext& ctx, const ScalarField& u, const std::vector<double>& gp, double p,
                              Index w, double r) {
  const GridShape& s = ctx.shape();
  if (ctx.domain->is_inside(w)) throw std::invalid_argument("condition_b_check: centre must lie in the complement");
  RatioResult out;
  if (!ball_interior_to_box(s, w, 5.0 * r, false)) {
    out.excluded = true;
    return out;
  }
  double num = 0.0;
  for (Index i : ball_cells_at(s, w, r, false)) num += std::pow(std::abs(u.values[i]), p);
  if (num == 0.0) return out;
  const double den = std::pow(r, p) * ball_sum(s, gp, w, 5.0 * r);
  if (!(den > 0.0)) {
    out.violation = true;
    out.ratio = kInf;
    return out;
  }
  out.ratio = num / den;
  return out;
}

RatioResult condition_c_check(const HardyContext& ctx, const ScalarField& u, double p, Index x) {
  return condition_c_check(ctx, u, gradient_power(u, p), p, x);
}

RatioResult condition_c_check(const HardyContext& ctx, const ScalarField& u, const std::vector<double>& gp, double p,
                              Index x) {
  const GridShape& s = ctx.shape();
  if (!ctx.domain->is_inside(x)) throw std::invalid_argument("condition_c_check: point must lie in the domain");
  RatioResult out;
  const double d = ctx.dist.to_complement.values[x];
  if (!ball_interior_to_box(s, x, 20.0 * d, false)) {
    out.excluded = true;
    return out;
  }
  const double ub = std::abs(ball_mean(u, x, d));
  if (ub == 0.0) return out;
  const auto big = ball_cells_at(s, x, 20.0 * d, false);
  double g = 0.0;
  for (Index i : big) g += gp[i];
  g /= static_cast<double>(big.size());
  const double den = std::pow(d, p) * g;
  if (!(den > 0.0)) {
    out.violation = true;
    out.ratio = kInf;
    return out;
  }
  out.ratio = std::pow(ub, p) / den;
  return out;
}

double integral_hardy_quotient(const HardyContext& ctx, const ScalarField& u, double p) {
  const GridShape& s = ctx.shape();
  const auto& d = ctx.dist.to_complement.values;
  double num = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    if (!ctx.domain->is_inside(i) || u.values[i] == 0.0) continue;
    num += std::pow(std::abs(u.values[i]) / d[i], p);
  }
  double den = 0.0;
  for (double g : gradient_power(u, p)) den += g;
  if (!(den > 0.0)) throw std::invalid_argument("integral_hardy_quotient: u is identically zero");
  return num / den;
}

namespace {

std::vector<Index> condition_c_points(const HardyContext& ctx, std::size_t max_points) {
  const GridShape& s = ctx.shape();
  std::vector<Index> out;
  std::size_t live = 0;
  for (const auto& layer : ctx.layers) live += layer.cells.empty() ? 0 : 1;
  if (live == 0) return out;
  const std::size_t per = std::max<std::size_t>(1, max_points / live);
  for (const auto& layer : ctx.layers) {
    std::vector<Index> cand;
    for (Index i : layer.cells)
      if (ball_interior_to_box(s, i, 20.0 * ctx.dist.to_complement.values[i], false)) cand.push_back(i);
    if (cand.empty()) continue;
    auto picked = farthest_point_sample(s, cand, per);
    out.insert(out.end(), picked.begin(), picked.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct BallSample {
  Index w;
  double r;
};

std::vector<BallSample> condition_b_balls(const HardyContext& ctx, std::size_t max_balls) {
  const GridShape& s = ctx.shape();
  std::vector<double> radii;
  for (double r = 2.0 * s.h(); 10.0 * r <= s.min_side() * (1.0 + 1e-12); r *= 2.0) radii.push_back(r);
  std::vector<BallSample> out;
  if (radii.empty()) return out;
  for (Index w : complement_centers(*ctx.domain, radii.back(), max_balls))
    for (double r : radii) out.push_back({w, r});
  return out;
}

}  // namespace

HardyReport hardy_report(const HardyContext& ctx, double p, const TestFamily& family, const HardyOptions& options) {
  HardyReport rep;
  rep.domain_label = ctx.domain->name();
  rep.p = p;
  rep.L = options.L;
  rep.test_family_label = family.label();
  const auto balls = condition_b_balls(ctx, options.max_balls);
  const auto points = condition_c_points(ctx, options.max_points);

  struct Partial {
    double pw = 0.0, p999 = 0.0, q = 0.0, b = 0.0, c = 0.0;
    std::size_t excluded = 0, flagged = 0, violations = 0;
  };
  std::vector<Partial> parts(family.size());
  detail::parallel_for(family.size(), options.threads, [&](std::size_t k) {
    const FamilyMember m = family.member(k);
    Partial& pt = parts[k];
    PointwiseOptions po;
    po.L = options.L;
    po.boundary_distance = options.boundary_distance;
    const auto pw = pointwise_hardy_check(ctx, m.field, p, po);
    pt.pw = pw.sup;
    pt.p999 = pw.p999;
    pt.excluded += pw.excluded;
    pt.flagged += pw.flagged;
    pt.q = integral_hardy_quotient(ctx, m.field, p);
    const auto gp = gradient_power(m.field, p);
    for (const auto& b : balls) {
      auto r = condition_b_check(ctx, m.field, gp, p, b.w, b.r);
      pt.excluded += r.excluded;
      pt.violations += r.violation;
      pt.b = std::max(pt.b, r.ratio);
    }
    for (Index x : points) {
      auto r = condition_c_check(ctx, m.field, gp, p, x);
      pt.excluded += r.excluded;
      pt.violations += r.violation;
      pt.c = std::max(pt.c, r.ratio);
    }
  });
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Partial& pt = parts[k];
    if (k == 0 || pt.pw > rep.pointwise_constant) {
      rep.pointwise_constant = pt.pw;
      rep.pointwise_argmax_member = family.spec(k).label;
    }
    rep.pointwise_p999 = std::max(rep.pointwise_p999, pt.p999);
    rep.integral_quotient = std::max(rep.integral_quotient, pt.q);
    rep.condition_b_constant = std::max(rep.condition_b_constant, pt.b);
    rep.condition_c_constant = std::max(rep.condition_c_constant, pt.c);
    rep.excluded += pt.excluded;
    rep.flagged += pt.flagged;
    rep.violations += pt.violations;
  }
  return rep;
}

double level_set_C1(double L, int n) {
  const double l = level_set_l(L);
  return std::pow(l, n) / (4.0 * std::pow(2.0, n));
}

LevelSetReport fatness_from_pointwise_experiment(const HardyContext& ctx, double p, double L, std::size_t max_samples,
                                                 const SolveOptions& solve, int threads) {
  const GridDomain& dom = *ctx.domain;
  const GridShape& s = dom.shape();
  const int n = s.dim();
  const double h = s.h();
  LevelSetReport rep;
  rep.p = p;
  rep.L = L;
  rep.l = level_set_l(L);
  rep.C1 = level_set_C1(L, n);
  const double l = rep.l, C1 = rep.C1;
  const double cell = s.cell_measure();

  std::vector<double> radii;
  for (double R = 32.0 * h; R <= s.min_side() / 4.0 * (1.0 + 1e-12); R *= 2.0) radii.push_back(R);
  if (radii.empty()) return rep;
  struct Task {
    Index w;
    double R;
  };
  std::vector<Task> tasks;
  std::size_t k = 0;
  for (Index w : complement_centers(dom, radii.back(), max_samples)) {
    const double R = radii[k++ % radii.size()];
    if (!ball_interior_to_box(s, w, 2.0 * R, false)) {
      ++rep.excluded;
      continue;
    }
    tasks.push_back({w, R});
  }

  const CellMask comp = dom.complement();
  const auto& d = ctx.dist.to_complement.values;
  rep.samples.resize(tasks.size());
  detail::parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    LevelSetSample& smp = rep.samples[t];
    smp.w = task.w;
    smp.R = task.R;
    const auto res = solve_capacity(ball_condenser(s, comp, task.w, task.R, 2.0 * task.R, p), solve);
    smp.solved_capacity = res.value;
    const ScalarField& v = res.extremal;
    smp.v_mean = ball_mean(v, task.w, task.R);
    smp.poincare_branch = smp.v_mean > 2.0 * C1;

    const Point pw = s.center(task.w);
    ScalarField u(s);
    for (Index i = 0; i < s.size(); ++i) {
      const double r = std::sqrt(squared_distance(s.center(i), pw, n));
      const double psi = std::max(0.0, 1.0 - 4.0 / task.R * std::max(0.0, r - task.R / 2.0));
      u.values[i] = std::min(psi, 1.0 - v.values[i]);
    }
    ScalarField gp(s);
    gp.values = gradient_power(u, p);

    smp.mu_B = static_cast<double>(ball_cell_count_at(s, task.w, task.R, false)) * cell;
    struct Pick {
      Index x;
      double r;
    };
    std::vector<Pick> E;
    for (Index i : ball_cells_at(s, task.w, l * task.R, false)) {
      if (!dom.is_inside(i) || !(u.values[i] > C1)) continue;
      double rx = 0.0;
      const double m = maximal_at(gp, i, L * d[i], 0.0, &rx);
      if (m > 0.0) smp.pointwise_constant = std::max(smp.pointwise_constant, u.values[i] / (d[i] * std::pow(m, 1.0 / p)));
      E.push_back({i, rx});
    }
    smp.mu_E = static_cast<double>(E.size()) * cell;
    smp.eka_holds = smp.mu_E >= C1 * smp.mu_B;
    if (E.empty()) return;

    // Vitali selection: largest radii first, keep pairwise disjoint balls.
    std::stable_sort(E.begin(), E.end(), [](const Pick& a, const Pick& b) { return a.r > b.r; });
    std::vector<Pick> chosen;
    for (const auto& e : E) {
      const Point pe = s.center(e.x);
      bool free = true;
      for (const auto& c : chosen) {
        const double gap = std::sqrt(squared_distance(pe, s.center(c.x), n));
        if (gap < e.r + c.r) {
          free = false;
          break;
        }
      }
      if (free) chosen.push_back(e);
    }
    double mu_small = 0.0, mu_big = 0.0;
    for (const auto& c : chosen) {
      mu_small += static_cast<double>(ball_cell_count_at(s, c.x, c.r, false)) * cell;
      mu_big += static_cast<double>(ball_cell_count_at(s, c.x, 5.0 * c.r, false)) * cell;
    }
    smp.cover_size = chosen.size();
    const double rho = mu_big / mu_small;
    const double K = rho * std::pow(smp.pointwise_constant * l, p) / std::pow(C1, 1.0 + p);
    smp.implied_lower = K > 0.0 ? smp.mu_B * std::pow(task.R, -p) / K : 0.0;
    smp.goal_holds = smp.implied_lower <= smp.solved_capacity * (1.0 + 1e-6);
  });
  for (const auto& smp : rep.samples) {
    rep.all_eka = rep.all_eka && smp.eka_holds;
    rep.all_goal = rep.all_goal && smp.goal_holds;
  }
  return rep;
}

}  // namespace hardylab
