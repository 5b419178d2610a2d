#include "hardylab/maximal.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "util.hpp"

namespace hardylab {

namespace testing_hooks {
namespace {
std::atomic<bool> ladder_fault{false};
}
void set_maximal_ladder_fault(bool on) { ladder_fault.store(on); }
bool maximal_ladder_fault() { return ladder_fault.load(); }
}  // namespace testing_hooks

std::vector<double> radius_ladder(double h, double cap) {
  if (!(cap >= h * (1.0 - 1e-12))) throw std::invalid_argument("radius cap below the cell size");
  std::vector<double> out;
  for (double r = h; r < cap * (1.0 - 1e-12); r *= 2.0) out.push_back(r);
  out.push_back(cap);
  return out;
}

double ball_mean(const ScalarField& f, Index center, double radius) {
  const GridShape& s = f.shape;
  const Stencil& st = ball_stencil(s.dim(), radius / s.h(), false);
  const Coord c = s.coords(center);
  bool inside = true;
  for (int a = 0; a < s.dim(); ++a)
    if (c[a] - st.reach < 0 || c[a] + st.reach >= s.counts()[a]) inside = false;
  double sum = 0.0;
  std::size_t n = 0;
  if (inside) {
    const auto sd = s.strides();
    const double* base = f.values.data() + center;
    for (const auto& run : st.runs) {
      const double* row = base + static_cast<std::ptrdiff_t>(run.dy) * static_cast<std::ptrdiff_t>(sd[1]) +
                          static_cast<std::ptrdiff_t>(run.dz) * static_cast<std::ptrdiff_t>(sd[2]);
      for (int x = run.x0; x <= run.x1; ++x) sum += row[x];
    }
    n = st.offsets.size();
  } else {
    for (const Coord& o : st.offsets) {
      const Coord q{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (!s.contains(q)) continue;
      sum += f.values[s.index(q)];
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

double maximal_at(const ScalarField& f, Index center, double cap, double alpha, double* argmax_radius) {
  const bool fault = testing_hooks::maximal_ladder_fault();
  double best = fault ? std::numeric_limits<double>::infinity() : -1.0;
  double best_r = 0.0;
  for (double r : radius_ladder(f.shape.h(), cap)) {
    double v = ball_mean(f, center, r);
    if (alpha != 0.0) v *= std::pow(r, alpha);
    if (fault ? v < best : v > best) {
      best = v;
      best_r = r;
    }
  }
  if (argmax_radius) *argmax_radius = best_r;
  return best;
}

double maximal_at(const ScalarField& f, Index center, double cap, double alpha) {
  return maximal_at(f, center, cap, alpha, nullptr);
}

ScalarField restricted_maximal(const MaximalQuery& q) {
  if (!q.field) throw std::invalid_argument("restricted_maximal: missing field");
  const ScalarField& f = *q.field;
  ScalarField out(f.shape);
  detail::parallel_for(f.shape.size(), q.threads, [&](Index i) {
    if (q.evaluate && !(*q.evaluate)[i]) return;
    const double cap = q.cap_field ? q.cap_field->values[i] : q.uniform_cap;
    out.values[i] = maximal_at(f, i, cap, q.alpha);
  });
  return out;
}

TelescopingResult telescoping_check(const ScalarField& u, Index center, double r, double p) {
  if (!ball_interior_to_box(u.shape, center, r, false))
    throw std::invalid_argument("telescoping_check: ball leaves the box");
  const double ub = ball_mean(u, center, r);
  const double num = std::abs(u.values[center] - ub);
  const GradientField g = discrete_gradient(u);
  ScalarField gp(u.shape);
  for (Index i = 0; i < gp.values.size(); ++i) gp.values[i] = std::pow(g.values[i], p);
  const double m = maximal_at(gp, center, r, 0.0);
  TelescopingResult out;
  const double den = r * std::pow(m, 1.0 / p);
  if (num == 0.0) return out;
  if (den == 0.0) {
    out.violation = true;
    out.ratio = std::numeric_limits<double>::infinity();
    return out;
  }
  out.ratio = num / den;
  return out;
}

}  // namespace hardylab
