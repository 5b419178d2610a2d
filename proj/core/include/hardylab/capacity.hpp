#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hardylab/grid.hpp"

namespace hardylab {

struct CondenserProblem {
  GridShape shape;
  CellMask plate;   // E
  CellMask window;  // Ω′, must contain E
  double p = 2.0;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 20000;
  double p1_smoothing = 1e-4;  // ε in sqrt(|Du|² + ε²) for p = 1
};

struct CapacityResult {
  double value = 0.0;
  ScalarField extremal;
  int iterations = 0;
  double residual = 0.0;
  bool non_converged = false;
  bool approximate = false;
  bool empty_plate = false;

  std::vector<std::string> flags() const;
};

CapacityResult solve_capacity(const CondenserProblem& problem, const SolveOptions& options = {});

// Condenser (Ω^c-type plate) ∩ B̄(center, r) inside the window B(center, R).
CondenserProblem ball_condenser(const GridShape& shape, const CellMask& plate_source, Index center, double r,
                                double window_radius, double p);

struct CapComparison {
  double capacity = 0.0;
  double lower_quantity = 0.0;  // μ(E) / (cap r^p), must stay ≤ C
  double upper_quantity = 0.0;  // cap r^p / μ(B), must stay ≤ C
  double lower_ratio = 0.0;     // cap·C·r^p/μ(E), ok iff ≥ 1
  double upper_ratio = 0.0;     // cap·r^p/(C·μ(B)), ok iff ≤ 1
  bool lower_ok = false;
  bool upper_ok = false;
};

// Frozen (cap ie) constants, calibrated on the built-in suite at h = 1/64.
std::optional<double> capie_constant(int dim, double p);

CapComparison cap_comparison_check(const GridShape& shape, Index center, double r, const CellMask& subset, double p,
                                   double C, const SolveOptions& options = {});

struct MazyaResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool empty_zero_set = false;
};

MazyaResult mazya_check(const ScalarField& u, Index center, double r, double p, const SolveOptions& options = {});

}  // namespace hardylab
