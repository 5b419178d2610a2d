#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "hardylab/capacity.hpp"
#include "hardylab/grid.hpp"

namespace hardylab {

struct FatnessOptions {
  std::size_t max_centers = 256;
  double min_radius_cells = 4.0;
  double max_radius = 0.0;  // 0: a quarter of the shortest box side
  SolveOptions solve;
  int threads = 0;
};

struct FatnessSample {
  Index center = 0;
  Point coords{0.0, 0.0, 0.0};
  double radius = 0.0;
  double numerator = 0.0;    // cap_p(Ω^c ∩ B̄(x,r), B(x,2r))
  double denominator = 0.0;  // cap_p(B̄(x,r), B(x,2r))
  double ratio = 0.0;
  bool non_converged = false;
};

struct FatnessProfile {
  std::string set_label;
  double p = 2.0;
  std::vector<FatnessSample> samples;
  double c0_estimate = 0.0;
  std::vector<double> radii_ladder;
  std::size_t excluded = 0;
  std::vector<std::string> warnings;
};

// r ∈ {4h, 8h, ...} up to the cap (a quarter of the shortest box side by default).
std::vector<double> fatness_radii(const GridShape& shape, const FatnessOptions& options);

// Farthest-point thinning of `candidates`, seeded at the first candidate.
std::vector<Index> farthest_point_sample(const GridShape& shape, const std::vector<Index>& candidates,
                                         std::size_t max_count);

// Complement cells within 4·max_radius of ∂Ω whose smallest doubled ball fits the box, thinned.
std::vector<Index> complement_centers(const GridDomain& domain, double max_radius, std::size_t max_centers);

FatnessProfile fatness_profile(const GridDomain& domain, double p, const FatnessOptions& options = {});
FatnessProfile fatness_profile(const GridDomain& domain, double p, const std::vector<Index>& centers,
                               const std::vector<double>& radii, const FatnessOptions& options = {});

// Largest (cap ie) quantities over the fatness samples, with E = Ω^c ∩ B̄
// and E = B̄ at every radius. The smallest admissible C is max(lower, upper).
struct CapComparisonSweep {
  double p = 2.0;
  double lower_max = 0.0;  // μ(E) / (cap r^p)
  double upper_max = 0.0;  // cap r^p / μ(B)
  std::size_t samples = 0;
  std::size_t excluded = 0;
  double needed() const { return std::max(lower_max, upper_max); }
};

CapComparisonSweep cap_comparison_sweep(const GridDomain& domain, double p, const FatnessOptions& options = {});

struct DensitySample {
  Index center = 0;
  double radius = 0.0;
  double ratio = 0.0;
};

struct DensityReport {
  double min_ratio = 0.0;
  std::vector<DensitySample> samples;
  std::size_t excluded = 0;
};

DensityReport measure_density_check(const GridDomain& domain, const std::vector<Index>& centers,
                                    const std::vector<double>& radii);

enum class FatnessVerdict { fat, not_fat, undetermined };

inline constexpr double kFatnessThreshold = 1e-3;

// Needs the estimate at h and at h/2.
FatnessVerdict fatness_verdict(double c0_coarse, double c0_fine);
std::string to_string(FatnessVerdict v);

struct SelfImprovementProbe {
  double q = 0.0;
  double c0 = 0.0;
};

// c₀ at q ∈ {p - 0.25, p - 0.5} (q ≥ 1 only).
std::vector<SelfImprovementProbe> self_improvement_probe(const GridDomain& domain, double p,
                                                         const FatnessOptions& options = {});

}  // namespace hardylab
