#pragma once

#include <vector>

#include "hardylab/grid.hpp"

namespace hardylab {

struct MaximalQuery {
  const ScalarField* field = nullptr;      // nonnegative, typically g_u^p
  double uniform_cap = 0.0;                // used when cap_field is null
  const ScalarField* cap_field = nullptr;  // per-cell radius caps
  double alpha = 0.0;
  const CellMask* evaluate = nullptr;      // restrict evaluation; other cells get 0
  int threads = 1;
};

// h, 2h, 4h, ... strictly below the cap, then the cap itself.
std::vector<double> radius_ladder(double h, double cap);

// Mean of f over the discretized open ball, clipped to the box.
double ball_mean(const ScalarField& f, Index center, double radius);

// sup over the ladder of r^α · mean_{B(x,r)} f at one cell.
double maximal_at(const ScalarField& f, Index center, double cap, double alpha);

// Same sup, also returning the maximizing radius.
double maximal_at(const ScalarField& f, Index center, double cap, double alpha, double* argmax_radius);

ScalarField restricted_maximal(const MaximalQuery& query);

struct TelescopingResult {
  double ratio = 0.0;
  bool violation = false;  // zero denominator with nonzero numerator
};

// |u(x) - u_B| / (r (M_r g_u^p(x))^{1/p}) at the ball centre.
TelescopingResult telescoping_check(const ScalarField& u, Index center, double r, double p);

namespace testing_hooks {
// Fault injection for the verify contract: replaces the sup over the ladder
// with an inf, which breaks sublinearity.
void set_maximal_ladder_fault(bool on);
bool maximal_ladder_fault();
}  // namespace testing_hooks

}  // namespace hardylab
