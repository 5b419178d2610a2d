#include "hardylab/fatness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "util.hpp"

namespace hardylab {

std::vector<double> fatness_radii(const GridShape& shape, const FatnessOptions& options) {
  const double cap = options.max_radius > 0.0 ? options.max_radius : shape.min_side() / 4.0;
  std::vector<double> out;
  for (double r = options.min_radius_cells * shape.h(); r <= cap * (1.0 + 1e-12); r *= 2.0) out.push_back(r);
  return out;
}

std::vector<Index> farthest_point_sample(const GridShape& shape, const std::vector<Index>& candidates,
                                         std::size_t max_count) {
  if (candidates.size() <= max_count) return candidates;
  std::vector<Point> pts(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) pts[k] = shape.center(candidates[k]);
  std::vector<double> best(candidates.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> chosen;
  std::size_t next = 0;
  while (chosen.size() < max_count) {
    chosen.push_back(next);
    const Point& q = pts[next];
    double far = -1.0;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      best[k] = std::min(best[k], squared_distance(pts[k], q, shape.dim()));
      if (best[k] > far) {
        far = best[k];
        arg = k;
      }
    }
    if (far <= 0.0) break;
    next = arg;
  }
  std::vector<Index> out;
  out.reserve(chosen.size());
  for (std::size_t k : chosen) out.push_back(candidates[k]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Index> complement_centers(const GridDomain& domain, double max_radius, std::size_t max_centers) {
  const GridShape& s = domain.shape();
  const auto sq = squared_distance_transform(s, domain.inside());
  const double lim = 4.0 * max_radius / s.h();
  const double smallest = 2.0 * FatnessOptions{}.min_radius_cells * s.h();
  std::vector<Index> cand;
  for (Index i = 0; i < s.size(); ++i)
    if (!domain.is_inside(i) && sq[i] <= lim * lim && ball_interior_to_box(s, i, smallest, false)) cand.push_back(i);
  return farthest_point_sample(s, cand, max_centers);
}

FatnessProfile fatness_profile(const GridDomain& domain, double p, const FatnessOptions& options) {
  const auto radii = fatness_radii(domain.shape(), options);
  if (radii.empty()) throw std::runtime_error("fatness_profile: no admissible samples (radius ladder empty)");
  const auto centers = complement_centers(domain, radii.back(), options.max_centers);
  return fatness_profile(domain, p, centers, radii, options);
}

FatnessProfile fatness_profile(const GridDomain& domain, double p, const std::vector<Index>& centers,
                               const std::vector<double>& radii, const FatnessOptions& options) {
  const GridShape& s = domain.shape();
  const CellMask comp = domain.complement();
  FatnessProfile prof;
  prof.set_label = "complement of " + domain.name();
  prof.p = p;
  prof.radii_ladder = radii;

  struct Task {
    Index center;
    double r;
  };
  std::vector<Task> tasks;
  std::map<double, Index> reference;  // radius -> a centre where 2B fits
  for (Index c : centers) {
    if (domain.is_inside(c)) throw std::invalid_argument("fatness_profile: centre is not a complement cell");
    for (double r : radii) {
      if (!ball_interior_to_box(s, c, 2.0 * r, false)) {
        ++prof.excluded;
        continue;
      }
      tasks.push_back({c, r});
      reference.emplace(r, c);
    }
  }
  if (prof.excluded > 0)
    prof.warnings.push_back(std::to_string(prof.excluded) + " (x, r) pairs excluded: 2B leaves the box");
  if (tasks.empty()) throw std::runtime_error("fatness_profile: no admissible samples");

  // cap(B̄(x,r), B(x,2r)) is translation invariant on the grid.
  std::vector<double> ref_r;
  for (const auto& [r, c] : reference) ref_r.push_back(r);
  std::vector<double> den(ref_r.size());
  std::vector<char> den_nc(ref_r.size(), 0);
  detail::parallel_for(ref_r.size(), options.threads, [&](std::size_t k) {
    CellMask all(s.size(), 1);
    auto res = solve_capacity(ball_condenser(s, all, reference.at(ref_r[k]), ref_r[k], 2.0 * ref_r[k], p), options.solve);
    den[k] = res.value;
    den_nc[k] = res.non_converged;
  });
  auto den_of = [&](double r) {
    auto k = static_cast<std::size_t>(std::lower_bound(ref_r.begin(), ref_r.end(), r) - ref_r.begin());
    return k;
  };

  prof.samples.resize(tasks.size());
  detail::parallel_for(tasks.size(), options.threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    FatnessSample& smp = prof.samples[t];
    const std::size_t k = den_of(task.r);
    smp.center = task.center;
    smp.coords = s.center(task.center);
    smp.radius = task.r;
    smp.denominator = den[k];
    auto pr = ball_condenser(s, comp, task.center, task.r, 2.0 * task.r, p);
    if (count_cells(pr.plate) == ball_cell_count_at(s, task.center, task.r, true)) {
      smp.numerator = den[k];
      smp.non_converged = den_nc[k];
    } else {
      auto res = solve_capacity(pr, options.solve);
      smp.numerator = res.value;
      smp.non_converged = res.non_converged;
    }
    smp.ratio = smp.numerator / smp.denominator;
  });
  prof.c0_estimate = std::numeric_limits<double>::infinity();
  std::size_t nc = 0;
  for (const auto& smp : prof.samples) {
    prof.c0_estimate = std::min(prof.c0_estimate, smp.ratio);
    nc += smp.non_converged;
  }
  if (nc > 0) prof.warnings.push_back(std::to_string(nc) + " capacity solves hit max_iter");
  return prof;
}

DensityReport measure_density_check(const GridDomain& domain, const std::vector<Index>& centers,
                                    const std::vector<double>& radii) {
  const GridShape& s = domain.shape();
  DensityReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (Index c : centers)
    for (double r : radii) {
      if (!ball_interior_to_box(s, c, 2.0 * r, false)) {
        ++rep.excluded;
        continue;
      }
      const auto cells = ball_cells_at(s, c, r, false);
      std::size_t out = 0;
      for (Index i : cells) out += domain.is_inside(i) ? 0 : 1;
      const double ratio = static_cast<double>(out) / static_cast<double>(cells.size());
      rep.samples.push_back({c, r, ratio});
      rep.min_ratio = std::min(rep.min_ratio, ratio);
    }
  if (rep.samples.empty()) throw std::runtime_error("measure_density_check: no admissible samples");
  return rep;
}

FatnessVerdict fatness_verdict(double c0_coarse, double c0_fine) {
  if (!std::isfinite(c0_coarse) || !std::isfinite(c0_fine)) return FatnessVerdict::undetermined;
  const bool floor_ok = c0_coarse >= kFatnessThreshold && c0_fine >= kFatnessThreshold;
  return floor_ok && c0_fine * 2.0 >= c0_coarse ? FatnessVerdict::fat : FatnessVerdict::not_fat;
}

std::string to_string(FatnessVerdict v) {
  switch (v) {
    case FatnessVerdict::fat:
      return "uniformly p-fat at scale";
    case FatnessVerdict::not_fat:
      return "not p-fat";
    default:
      return "undetermined";
  }
}

std::vector<SelfImprovementProbe> self_improvement_probe(const GridDomain& domain, double p,
                                                         const FatnessOptions& options) {
  std::vector<SelfImprovementProbe> out;
  for (double q : {p - 0.25, p - 0.5}) {
    if (q < 1.0) continue;
    out.push_back({q, fatness_profile(domain, q, options).c0_estimate});
  }
  return out;
}

CapComparisonSweep cap_comparison_sweep(const GridDomain& domain, double p, const FatnessOptions& options) {
  const GridShape& s = domain.shape();
  const auto radii = fatness_radii(s, options);
  if (radii.empty()) throw std::runtime_error("cap_comparison_sweep: radius ladder empty");
  const CellMask comp = domain.complement();
  struct Task {
    Index center;
    double r;
    bool whole;
  };
  std::vector<Task> tasks;
  std::set<double> whole_done;
  CapComparisonSweep out;
  out.p = p;
  for (Index c : complement_centers(domain, radii.back(), options.max_centers))
    for (double r : radii) {
      if (!ball_interior_to_box(s, c, 2.0 * r, false)) {
        ++out.excluded;
        continue;
      }
      tasks.push_back({c, r, false});
      if (whole_done.insert(r).second) tasks.push_back({c, r, true});
    }
  if (tasks.empty()) throw std::runtime_error("cap_comparison_sweep: no admissible samples");
  std::vector<CapComparison> res(tasks.size());
  detail::parallel_for(tasks.size(), options.threads, [&](std::size_t t) {
    const Task& k = tasks[t];
    CellMask subset(s.size(), 0);
    for (Index i : ball_cells_at(s, k.center, k.r, true)) subset[i] = k.whole || comp[i];
    res[t] = cap_comparison_check(s, k.center, k.r, subset, p, 1.0, options.solve);
  });
  for (const auto& r : res) {
    out.lower_max = std::max(out.lower_max, r.lower_quantity);
    out.upper_max = std::max(out.upper_max, r.upper_quantity);
  }
  out.samples = res.size();
  return out;
}

}  // namespace hardylab
