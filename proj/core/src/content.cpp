#include "hardylab/content.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include "hardylab/fatness.hpp"
#include "hardylab/maximal.hpp"
#include "util.hpp"

namespace hardylab {

double ball_content_cost(const GridShape& shape, double r, double t) {
  const Stencil& st = ball_stencil(shape.dim(), r / shape.h(), false);
  return static_cast<double>(st.offsets.size()) * shape.cell_measure() / std::pow(r, t);
}

namespace {

void normalize(std::vector<Index>& E) {
  std::sort(E.begin(), E.end());
  E.erase(std::unique(E.begin(), E.end()), E.end());
}

// Positions (into E) of the cells of E inside the open ball.
class Coverage {
 public:
  Coverage(const GridShape& s, const std::vector<Index>& E) : s_(s), E_(E) {
    pts_.reserve(E.size());
    for (Index i : E) pts_.push_back(s.coords(i));
  }

  void members(std::size_t cpos, double r, std::vector<std::uint32_t>& out) const {
    out.clear();
    const double rc = r / s_.h();
    const Stencil& st = ball_stencil(s_.dim(), rc, false);
    const Coord& c = pts_[cpos];
    if (E_.size() <= st.offsets.size()) {
      for (std::size_t k = 0; k < pts_.size(); ++k) {
        double sq = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double dlt = pts_[k][a] - c[a];
          sq += dlt * dlt;
        }
        if (within_radius(sq, rc, false)) out.push_back(static_cast<std::uint32_t>(k));
      }
      return;
    }
    for (const Coord& o : st.offsets) {
      const Coord q{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (!s_.contains(q)) continue;
      auto it = std::lower_bound(E_.begin(), E_.end(), s_.index(q));
      if (it != E_.end() && *it == s_.index(q)) out.push_back(static_cast<std::uint32_t>(it - E_.begin()));
    }
    std::sort(out.begin(), out.end());
  }

 private:
  const GridShape& s_;
  const std::vector<Index>& E_;
  std::vector<Coord> pts_;
};

CoverCandidate greedy_cover(const GridShape& s, const std::vector<Index>& E, const std::vector<double>& ladder,
                            const std::vector<double>& costs) {
  Coverage cov(s, E);
  struct Entry {
    std::size_t gain;
    double eff;
    std::size_t k;
    std::size_t cpos;
  };
  auto worse = [&](const Entry& a, const Entry& b) {
    if (a.eff != b.eff) return a.eff < b.eff;
    if (a.k != b.k) return a.k < b.k;   // larger radius first
    return E[a.cpos] > E[b.cpos];       // then lower centre index
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> pq(worse);
  std::vector<std::uint32_t> buf;
  for (std::size_t c = 0; c < E.size(); ++c)
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      cov.members(c, ladder[k], buf);
      pq.push({buf.size(), static_cast<double>(buf.size()) / costs[k], k, c});
    }
  std::vector<char> covered(E.size(), 0);
  std::size_t remaining = E.size();
  CoverCandidate out;
  while (remaining > 0) {
    Entry top = pq.top();
    pq.pop();
    cov.members(top.cpos, ladder[top.k], buf);
    std::size_t gain = 0;
    for (auto m : buf) gain += covered[m] ? 0 : 1;
    if (gain != top.gain) {
      if (gain > 0) pq.push({gain, static_cast<double>(gain) / costs[top.k], top.k, top.cpos});
      continue;
    }
    for (auto m : buf)
      if (!covered[m]) {
        covered[m] = 1;
        --remaining;
      }
    out.balls.push_back({E[top.cpos], ladder[top.k], costs[top.k]});
    out.cost += costs[top.k];
  }
  return out;
}

}  // namespace

ContentEstimate estimate_content(const GridShape& shape, std::vector<Index> E, double t, double R,
                                 const ContentOptions& options) {
  normalize(E);
  if (E.empty()) throw std::invalid_argument("estimate_content: E is empty");
  if (!(R >= shape.h() * (1.0 - 1e-12))) throw std::invalid_argument("estimate_content: R below the cell size");
  const auto ladder = radius_ladder(shape.h(), R);
  std::vector<double> costs;
  for (double r : ladder) costs.push_back(ball_content_cost(shape, r, t));
  ContentEstimate est;
  est.t = t;
  est.R = R;
  est.witness = greedy_cover(shape, E, ladder, costs);
  est.upper_value = est.witness.cost;
  if (options.exact) est.lower_value = exact_content(shape, E, t, R, options);
  return est;
}

bool cover_covers(const GridShape& shape, const CoverCandidate& cover, const std::vector<Index>& E) {
  const int n = shape.dim();
  for (Index e : E) {
    const Point pe = shape.center(e);
    bool hit = false;
    for (const auto& b : cover.balls) {
      const double sq = squared_distance(pe, shape.center(b.center), n) / (shape.h() * shape.h());
      if (within_radius(std::round(sq), b.radius / shape.h(), false)) {
        hit = true;
        break;
      }
    }
    if (!hit) return false;
  }
  return true;
}

std::optional<double> exact_content(const GridShape& shape, std::vector<Index> E, double t, double R,
                                    const ContentOptions& options) {
  normalize(E);
  if (E.empty()) throw std::invalid_argument("exact_content: E is empty");
  if (E.size() > std::min<std::size_t>(64, options.exact_max_cells)) return std::nullopt;
  const auto ladder = radius_ladder(shape.h(), R);
  if (ladder.size() > options.exact_max_radii) return std::nullopt;
  std::vector<double> costs;
  for (double r : ladder) costs.push_back(ball_content_cost(shape, r, t));

  Coverage cov(shape, E);
  std::map<std::uint64_t, double> best_for_mask;
  std::vector<std::uint32_t> buf;
  for (std::size_t c = 0; c < E.size(); ++c)
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      cov.members(c, ladder[k], buf);
      std::uint64_t m = 0;
      for (auto b : buf) m |= std::uint64_t{1} << b;
      auto [it, fresh] = best_for_mask.emplace(m, costs[k]);
      if (!fresh) it->second = std::min(it->second, costs[k]);
    }
  struct Set {
    std::uint64_t mask;
    double cost;
  };
  std::vector<Set> sets;
  for (const auto& [m, c] : best_for_mask) sets.push_back({m, c});
  std::vector<Set> kept;
  for (const auto& a : sets) {
    bool dominated = false;
    for (const auto& b : sets)
      if (&a != &b && (a.mask & ~b.mask) == 0 && b.cost <= a.cost && (b.mask != a.mask)) {
        dominated = true;
        break;
      }
    if (!dominated) kept.push_back(a);
  }
  const std::size_t N = E.size();
  const std::uint64_t full = N == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << N) - 1);
  std::vector<std::vector<std::size_t>> by_elem(N);
  for (std::size_t j = 0; j < kept.size(); ++j)
    for (std::size_t e = 0; e < N; ++e)
      if (kept[j].mask >> e & 1) by_elem[e].push_back(j);
  for (auto& v : by_elem)
    std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
      const double ea = kept[a].cost / std::popcount(kept[a].mask), eb = kept[b].cost / std::popcount(kept[b].mask);
      return ea != eb ? ea < eb : a < b;
    });

  double best = greedy_cover(shape, E, ladder, costs).cost;
  std::size_t nodes = 0;
  bool aborted = false;
  auto bound = [&](std::uint64_t covered) {
    const std::uint64_t U = full & ~covered;
    double lb = 0.0;
    for (std::uint64_t rest = U; rest; rest &= rest - 1) {
      const int e = std::countr_zero(rest);
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t j : by_elem[e]) m = std::min(m, kept[j].cost / std::popcount(kept[j].mask & U));
      lb += m;
    }
    return lb;
  };
  std::function<void(std::uint64_t, double)> dfs = [&](std::uint64_t covered, double cost) {
    if (aborted) return;
    if (++nodes > options.exact_node_limit) {
      aborted = true;
      return;
    }
    if (covered == full) {
      best = std::min(best, cost);
      return;
    }
    if (cost + bound(covered) * (1.0 - 1e-12) >= best) return;
    const int e = std::countr_zero(full & ~covered);
    for (std::size_t j : by_elem[e]) dfs(covered | kept[j].mask, cost + kept[j].cost);
  };
  dfs(0, 0.0);
  if (aborted) return std::nullopt;
  return best;
}

double box_counting_content(const GridShape& shape, const std::vector<Index>& E, int side_cells, double t) {
  if (side_cells < 1) throw std::invalid_argument("box_counting_content: side must be at least one cell");
  std::set<Coord> boxes;
  for (Index i : E) {
    Coord c = shape.coords(i);
    for (int a = 0; a < 3; ++a) c[a] /= side_cells;
    boxes.insert(c);
  }
  const double side = side_cells * shape.h();
  return static_cast<double>(boxes.size()) * std::pow(side, shape.dim() - t);
}

namespace {

double closed_measure(const GridShape& s, double r) {
  return static_cast<double>(ball_stencil(s.dim(), r / s.h(), true).offsets.size()) * s.cell_measure();
}

void finish(DensityFloor& f) {
  f.min_value = std::numeric_limits<double>::infinity();
  for (const auto& smp : f.samples) f.min_value = std::min(f.min_value, smp.value);
  if (f.samples.empty()) throw std::runtime_error("density check: no admissible samples");
}

}  // namespace

DensityFloor inner_density_check(const GridDomain& domain, double q, double L, const DensityOptions& options) {
  const GridShape& s = domain.shape();
  const DistanceFields dist = distance_fields(domain);
  const CellMask bd = domain.boundary();
  DensityFloor out;
  out.q = q;
  // scales below the fatness ladder's first rung only see lattice artefacts
  const double min_scale = FatnessOptions{}.min_radius_cells * s.h();
  std::map<int, std::vector<Index>> by_layer;
  for (Index i = 0; i < s.size(); ++i) {
    const double delta = dist.to_boundary.values[i];
    if (!domain.is_inside(i) || delta < min_scale * (1.0 - 1e-12)) continue;
    if (ball_interior_to_box(s, i, 2.0 * L * delta, true))
      by_layer[dyadic_layer_index(delta)].push_back(i);
    else
      ++out.excluded;
  }
  std::vector<Index> centers;
  const std::size_t per = std::max<std::size_t>(1, options.max_centers / std::max<std::size_t>(1, by_layer.size()));
  for (const auto& [k, cand] : by_layer) {
    const auto picked = farthest_point_sample(s, cand, per);
    centers.insert(centers.end(), picked.begin(), picked.end());
  }
  std::sort(centers.begin(), centers.end());
  out.samples.resize(centers.size());
  detail::parallel_for(centers.size(), options.threads, [&](std::size_t k) {
    const Index x = centers[k];
    const double delta = dist.to_boundary.values[x];
    std::vector<Index> E;
    for (Index i : ball_cells_at(s, x, 2.0 * L * delta, true))
      if (bd[i]) E.push_back(i);
    DensitySampleQ& smp = out.samples[k];
    smp.center = x;
    smp.scale = delta;
    if (E.empty()) return;
    smp.content = estimate_content(s, std::move(E), q, delta, options.content).upper_value;
    smp.value = smp.content * std::pow(delta, q) / closed_measure(s, delta);
  });
  finish(out);
  return out;
}

DensityFloor complement_density_check(const GridShape& s, const CellMask& E, double q, const DensityOptions& options) {
  DensityFloor out;
  out.q = q;
  FatnessOptions fo;
  const auto radii = fatness_radii(s, fo);
  if (radii.empty()) throw std::runtime_error("complement_density_check: radius ladder empty");
  CellMask other(s.size());
  for (Index i = 0; i < s.size(); ++i) other[i] = E[i] ? 0 : 1;
  std::vector<Index> cand;
  if (count_cells(other) == 0) {
    cand = mask_members(E);
  } else {
    const auto sq = squared_distance_transform(s, other);
    const double lim = 4.0 * radii.back() / s.h();
    for (Index i = 0; i < s.size(); ++i)
      if (E[i] && sq[i] <= lim * lim) cand.push_back(i);
  }
  if (cand.empty()) throw std::invalid_argument("complement_density_check: E is empty");
  struct Task {
    Index w;
    double R;
  };
  std::vector<Task> tasks;
  for (Index w : farthest_point_sample(s, cand, options.max_centers))
    for (double R : radii) {
      if (!ball_interior_to_box(s, w, R, true)) {
        ++out.excluded;
        continue;
      }
      tasks.push_back({w, R});
    }
  out.samples.resize(tasks.size());
  detail::parallel_for(tasks.size(), options.threads, [&](std::size_t k) {
    const Task& task = tasks[k];
    std::vector<Index> part;
    for (Index i : ball_cells_at(s, task.w, task.R, true))
      if (E[i]) part.push_back(i);
    DensitySampleQ& smp = out.samples[k];
    smp.center = task.w;
    smp.scale = task.R;
    smp.content = estimate_content(s, std::move(part), q, task.R / 2.0, options.content).upper_value;
    smp.value = smp.content * std::pow(task.R, q) / closed_measure(s, task.R);
  });
  finish(out);
  return out;
}

}  // namespace hardylab
