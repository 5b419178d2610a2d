#include "hardylab/capacity.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hardylab {

std::vector<std::string> CapacityResult::flags() const {
  std::vector<std::string> out;
  if (non_converged) out.emplace_back("non_converged");
  if (approximate) out.emplace_back("approximate");
  if (empty_plate) out.emplace_back("empty_plate");
  return out;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Cells whose difference stencil can see a free unknown, with the two
// endpoints of each per-axis difference.
struct Workspace {
  int dim = 0;
  std::vector<long> free_index;      // box cell -> unknown or -1
  std::vector<Index> unknowns;       // unknown -> box cell
  std::vector<Index> active;         // cells with a free endpoint
  std::vector<Index> pairs;          // 2*dim entries per active cell: lo, hi
  std::vector<Index> passive;        // remaining cells of the region, fixed differences
  std::vector<Index> passive_pairs;
};

Workspace build_workspace(const CondenserProblem& pr) {
  const GridShape& s = pr.shape;
  Workspace ws;
  ws.dim = s.dim();
  ws.free_index.assign(s.size(), -1);
  Coord lo{s.counts()[0], s.counts()[1], s.counts()[2]}, hi{-1, -1, -1};
  for (Index i = 0; i < s.size(); ++i) {
    if (!pr.window[i]) continue;
    const Coord c = s.coords(i);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
    if (!pr.plate[i]) {
      ws.free_index[i] = static_cast<long>(ws.unknowns.size());
      ws.unknowns.push_back(i);
    }
  }
  if (hi[0] < 0) return ws;
  for (int a = 0; a < s.dim(); ++a) {
    lo[a] = std::max(0, lo[a] - 1);
    hi[a] = std::min(s.counts()[a] - 1, hi[a] + 1);
  }
  const auto st = s.strides();
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) {
        const Coord c{x, y, z};
        const Index i = s.index(c);
        Index ends[6];
        bool touches = false;
        bool any = false;
        for (int a = 0; a < s.dim(); ++a) {
          Index l = i, h = i;
          if (c[a] + 1 < s.counts()[a]) {
            h = i + st[a];
          } else if (s.counts()[a] >= 2) {
            l = i - st[a];
          }
          ends[2 * a] = l;
          ends[2 * a + 1] = h;
          if (l != h) any = true;
          if (ws.free_index[l] >= 0 || ws.free_index[h] >= 0) touches = true;
        }
        if (!any) continue;
        auto& cells = touches ? ws.active : ws.passive;
        auto& prs = touches ? ws.pairs : ws.passive_pairs;
        cells.push_back(i);
        prs.insert(prs.end(), ends, ends + 2 * s.dim());
      }
  return ws;
}

double cell_sq(const std::vector<double>& u, const Index* ends, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double v = u[ends[2 * a + 1]] - u[ends[2 * a]];
    s += v * v;
  }
  return s;
}

// Energy in difference units (without the h^(n-p) factor).
double region_energy(const Workspace& ws, const std::vector<double>& u, double p, double eps2) {
  double e = 0.0;
  auto add = [&](const std::vector<Index>& prs, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      const double s = cell_sq(u, &prs[k * 2 * ws.dim], ws.dim);
      if (p == 2.0)
        e += s;
      else if (eps2 > 0.0)
        e += std::pow(s + eps2, 0.5 * p);
      else if (s > 0.0)
        e += std::pow(s, 0.5 * p);
    }
  };
  add(ws.pairs, ws.active.size());
  add(ws.passive_pairs, ws.passive.size());
  return e;
}

// Newton metric of the cell energy φ(s) = (s + ε²)^{p/2}; assembled over the
// free unknowns. Fixed endpoints move to the right-hand side when rhs != nullptr.
void assemble(const Workspace& ws, const std::vector<double>& u, double p, double eps2, bool newton,
              std::vector<Triplet>& trip, Eigen::VectorXd* grad) {
  trip.clear();
  const int n = ws.dim;
  double s_max = 0.0;
  std::vector<double> svals(ws.active.size());
  for (std::size_t k = 0; k < ws.active.size(); ++k) {
    svals[k] = cell_sq(u, &ws.pairs[k * 2 * n], n);
    s_max = std::max(s_max, svals[k]);
  }
  const double s_floor = std::max(1e-14, 1e-10 * s_max);
  if (grad) grad->setZero(static_cast<Eigen::Index>(ws.unknowns.size()));
  for (std::size_t k = 0; k < ws.active.size(); ++k) {
    const Index* ends = &ws.pairs[k * 2 * n];
    double v[3];
    for (int a = 0; a < n; ++a) v[a] = u[ends[2 * a + 1]] - u[ends[2 * a]];
    const double s = svals[k];
    double w = 2.0, curv = 0.0;
    if (p != 2.0) {
      const double se = std::max(s, s_floor) + eps2;
      const double d1 = 0.5 * p * std::pow(se, 0.5 * p - 1.0);
      w = 2.0 * d1;
      if (newton) curv = std::max(p - 2.0, -0.999) / se;
      if (grad) {
        const double g1 = 0.5 * p * std::pow(s + eps2 > 0.0 ? s + eps2 : s_floor, 0.5 * p - 1.0) * 2.0;
        for (int a = 0; a < n; ++a) {
          const long lo = ws.free_index[ends[2 * a]], hi = ws.free_index[ends[2 * a + 1]];
          if (hi >= 0) (*grad)[hi] += g1 * v[a];
          if (lo >= 0) (*grad)[lo] -= g1 * v[a];
        }
      }
    } else if (grad) {
      for (int a = 0; a < n; ++a) {
        const long lo = ws.free_index[ends[2 * a]], hi = ws.free_index[ends[2 * a + 1]];
        if (hi >= 0) (*grad)[hi] += 2.0 * v[a];
        if (lo >= 0) (*grad)[lo] -= 2.0 * v[a];
      }
    }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double m = w * ((a == b ? 1.0 : 0.0) + curv * v[a] * v[b]);
        if (m == 0.0) continue;
        const long ia[2] = {ws.free_index[ends[2 * a]], ws.free_index[ends[2 * a + 1]]};
        const long ib[2] = {ws.free_index[ends[2 * b]], ws.free_index[ends[2 * b + 1]]};
        const double sa[2] = {-1.0, 1.0};
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y)
            if (ia[x] >= 0 && ib[y] >= 0) trip.emplace_back(ia[x], ib[y], m * sa[x] * sa[y]);
      }
  }
}

}  // namespace

CapacityResult solve_capacity(const CondenserProblem& pr, const SolveOptions& opt) {
  const GridShape& s = pr.shape;
  if (pr.plate.size() != s.size() || pr.window.size() != s.size())
    throw std::invalid_argument("condenser masks do not match the grid");
  if (!(pr.p >= 1.0) || !std::isfinite(pr.p)) throw std::invalid_argument("capacity exponent must satisfy p >= 1");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("capacity tolerance must be positive");
  for (Index i = 0; i < s.size(); ++i)
    if (pr.plate[i] && !pr.window[i]) throw std::invalid_argument("condenser plate is not contained in the window");

  CapacityResult res;
  res.extremal = ScalarField(s);
  if (count_cells(pr.plate) == 0) {
    res.empty_plate = true;
    return res;
  }
  std::vector<double>& u = res.extremal.values;
  for (Index i = 0; i < s.size(); ++i) u[i] = pr.plate[i] ? 1.0 : 0.0;

  const Workspace ws = build_workspace(pr);
  const double scale = std::pow(s.h(), s.dim() - pr.p);
  const auto m = static_cast<Eigen::Index>(ws.unknowns.size());
  auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };

  std::vector<Triplet> trip;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> solver;
  if (m > 0) {
    // p = 2 Dirichlet problem: gradient at u (with unknowns zero) gives -rhs.
    Eigen::VectorXd grad;
    assemble(ws, u, 2.0, 0.0, false, trip, &grad);
    SpMat A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    solver.compute(A);
    if (solver.info() != Eigen::Success) throw std::runtime_error("capacity: sparse factorization failed");
    const Eigen::VectorXd rhs = -grad;
    Eigen::VectorXd x = solver.solve(rhs);
    const double bn = std::max(rhs.norm(), std::numeric_limits<double>::min());
    res.residual = (A * x - rhs).norm() / bn;
    for (int refine = 0; refine < 3 && res.residual > opt.tol; ++refine) {
      x += solver.solve(rhs - A * x);
      res.residual = (A * x - rhs).norm() / bn;
    }
    for (Eigen::Index k = 0; k < m; ++k) u[ws.unknowns[k]] = clamp01(x[k]);
    res.iterations = 1;
  }

  if (pr.p != 2.0 && m > 0) {
    const double eps2 = pr.p == 1.0 ? opt.p1_smoothing * opt.p1_smoothing : 0.0;
    res.approximate = pr.p == 1.0;
    double energy = region_energy(ws, u, pr.p, eps2);
    std::vector<double> trial(u);
    double step = 1.0;
    bool converged = false;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
      Eigen::VectorXd grad;
      assemble(ws, u, pr.p, eps2, true, trip, &grad);
      SpMat H(m, m);
      H.setFromTriplets(trip.begin(), trip.end());
      solver.compute(H);
      Eigen::VectorXd dir;
      if (solver.info() == Eigen::Success) {
        dir = -solver.solve(grad);
        if (!dir.allFinite() || dir.dot(grad) >= 0.0) dir = -grad;
      } else {
        dir = -grad;
      }
      step = std::min(1.0, 2.0 * step);
      bool accepted = false;
      double e_try = energy;
      while (step > 1e-12) {
        double slope = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
          const Index c = ws.unknowns[k];
          trial[c] = clamp01(u[c] + step * dir[k]);
          slope += grad[k] * (trial[c] - u[c]);
        }
        e_try = region_energy(ws, trial, pr.p, eps2);
        if (e_try <= energy + 1e-4 * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        converged = true;  // no representable descent left
        break;
      }
      const double decrease = (energy - e_try) / std::max(e_try, std::numeric_limits<double>::min());
      for (Eigen::Index k = 0; k < m; ++k) u[ws.unknowns[k]] = trial[ws.unknowns[k]];
      energy = e_try;
      res.residual = decrease;
      if (decrease < opt.tol) {
        converged = true;
        ++it;
        break;
      }
    }
    res.iterations += it;
    res.non_converged = !converged;
  }
  res.value = region_energy(ws, u, pr.p, 0.0) * scale;
  return res;
}

CondenserProblem ball_condenser(const GridShape& shape, const CellMask& plate_source, Index center, double r,
                                double window_radius, double p) {
  CondenserProblem pr{shape, CellMask(shape.size(), 0), CellMask(shape.size(), 0), p};
  for (Index i : ball_cells_at(shape, center, window_radius, false)) pr.window[i] = 1;
  for (Index i : ball_cells_at(shape, center, r, true))
    if (plate_source[i]) pr.plate[i] = 1;
  return pr;
}

// max over the 2-D suite (16 centres per domain, fatness radii) at h = 1/64,
// rounded up in the fifth digit
std::optional<double> capie_constant(int dim, double p) {
  if (dim != 2) return std::nullopt;
  if (p == 1.5) return 2.9500;
  if (p == 2.0) return 2.8273;
  if (p == 3.0) return 2.7889;
  return std::nullopt;
}

CapComparison cap_comparison_check(const GridShape& shape, Index center, double r, const CellMask& subset, double p,
                                   double C, const SolveOptions& options) {
  if (subset.size() != shape.size()) throw std::invalid_argument("subset mask does not match the grid");
  if (!ball_interior_to_box(shape, center, 2.0 * r, false))
    throw std::invalid_argument("cap_comparison_check: 2B leaves the box");
  CellMask closed(shape.size(), 0);
  for (Index i : ball_cells_at(shape, center, r, true)) closed[i] = 1;
  std::size_t n_sub = 0;
  for (Index i = 0; i < shape.size(); ++i)
    if (subset[i]) {
      if (!closed[i]) throw std::invalid_argument("cap_comparison_check: subset is not inside the closed ball");
      ++n_sub;
    }
  if (n_sub == 0) throw std::invalid_argument("cap_comparison_check: subset is empty");
  CondenserProblem pr{shape, subset, CellMask(shape.size(), 0), p};
  for (Index i : ball_cells_at(shape, center, 2.0 * r, false)) pr.window[i] = 1;
  const double cap = solve_capacity(pr, options).value;
  const double mu_e = static_cast<double>(n_sub) * shape.cell_measure();
  const double mu_b = static_cast<double>(ball_cell_count_at(shape, center, r, false)) * shape.cell_measure();
  const double rp = std::pow(r, p);
  CapComparison out;
  out.capacity = cap;
  out.lower_quantity = mu_e / (cap * rp);
  out.upper_quantity = cap * rp / mu_b;
  out.lower_ratio = cap * C * rp / mu_e;
  out.upper_ratio = cap * rp / (C * mu_b);
  out.lower_ok = out.lower_ratio >= 1.0;
  out.upper_ok = out.upper_ratio <= 1.0;
  return out;
}

MazyaResult mazya_check(const ScalarField& u, Index center, double r, double p, const SolveOptions& options) {
  const GridShape& s = u.shape;
  if (!ball_interior_to_box(s, center, 5.0 * r, false)) throw std::invalid_argument("mazya_check: 5B leaves the box");
  MazyaResult out;
  const auto ball = ball_cells_at(s, center, r, false);
  double mean = 0.0;
  for (Index i : ball) mean += std::pow(std::abs(u.values[i]), p);
  mean /= static_cast<double>(ball.size());
  CondenserProblem pr{s, CellMask(s.size(), 0), CellMask(s.size(), 0), p};
  for (Index i : ball) pr.window[i] = 1;
  std::size_t zeros = 0;
  for (Index i : ball_cells_at(s, center, 0.5 * r, false))
    if (u.values[i] == 0.0) {
      pr.plate[i] = 1;
      ++zeros;
    }
  const GradientField g = discrete_gradient(u);
  double rhs = 0.0;
  for (Index i : ball_cells_at(s, center, 5.0 * r, false)) rhs += std::pow(g.values[i], p);
  out.rhs = rhs * s.cell_measure();
  if (zeros == 0) {
    out.empty_zero_set = true;
    return out;
  }
  out.lhs = mean * solve_capacity(pr, options).value;
  if (out.lhs == 0.0)
    out.ratio = 0.0;
  else
    out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace hardylab
