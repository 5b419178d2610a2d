#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hardylab/grid.hpp"

namespace hardylab {

struct CoverBall {
  Index center = 0;
  double radius = 0.0;
  double cost = 0.0;  // μ(B) / r^t
};

struct CoverCandidate {
  std::vector<CoverBall> balls;
  double cost = 0.0;
};

struct ContentEstimate {
  std::string set_label;
  double t = 0.0;
  double R = 0.0;
  double upper_value = 0.0;
  CoverCandidate witness;
  std::optional<double> lower_value;  // exact optimum on small instances
};

struct ContentOptions {
  std::size_t exact_max_cells = 64;
  std::size_t exact_max_radii = 3;
  std::size_t exact_node_limit = 20'000'000;
  bool exact = true;
};

// μ of the discretized open ball of radius r in the unbounded grid, over r^t.
double ball_content_cost(const GridShape& shape, double r, double t);

// Ĥ^t_R(E) from above: lazy greedy on (centre ∈ E) × radius_ladder(h, R).
// E must be sorted; duplicates are ignored.
ContentEstimate estimate_content(const GridShape& shape, std::vector<Index> E, double t, double R,
                                 const ContentOptions& options = {});

// Cells of E inside the union of the cover's open balls.
bool cover_covers(const GridShape& shape, const CoverCandidate& cover, const std::vector<Index>& E);

// Exact minimum cover cost over the same candidate set; nullopt when the
// instance is too large or the node budget runs out.
std::optional<double> exact_content(const GridShape& shape, std::vector<Index> E, double t, double R,
                                    const ContentOptions& options = {});

// Number of axis-aligned boxes of side `side_cells` meeting E, times side^{n-t}.
double box_counting_content(const GridShape& shape, const std::vector<Index>& E, int side_cells, double t);

struct DensitySampleQ {
  Index center = 0;
  double scale = 0.0;  // δ(x) for the inner check, R for the complement check
  double content = 0.0;
  double value = 0.0;  // normalized density
};

struct DensityFloor {
  double q = 0.0;
  double min_value = 0.0;
  std::vector<DensitySampleQ> samples;
  std::size_t excluded = 0;
};

struct DensityOptions {
  std::size_t max_centers = 64;
  int threads = 1;
  ContentOptions content{0, 0, 0, false};
};

// min over sampled x ∈ Ω of Ĥ^q_{δ}(∂Ω ∩ B̄(x, 2Lδ)) δ^q / μ(B̄(x, δ)), δ = δ_Ω(x).
DensityFloor inner_density_check(const GridDomain& domain, double q, double L, const DensityOptions& options = {});

// min over sampled w ∈ E and R of Ĥ^q_{R/2}(E ∩ B̄(w,R)) R^q / μ(B̄(w,R)).
DensityFloor complement_density_check(const GridShape& shape, const CellMask& E, double q,
                                      const DensityOptions& options = {});

}  // namespace hardylab
