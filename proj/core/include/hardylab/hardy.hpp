#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hardylab/capacity.hpp"
#include "hardylab/grid.hpp"

namespace hardylab {

// Geometry shared by every Hardy check on one domain.
struct HardyContext {
  const GridDomain* domain = nullptr;
  DistanceFields dist;
  std::vector<DyadicLayer> layers;

  explicit HardyContext(const GridDomain& d);
  const GridShape& shape() const { return domain->shape(); }
};

enum class MemberKind { power, bump, product, hardy_profile, capacity_profile };

struct MemberSpec {
  MemberKind kind = MemberKind::power;
  double gamma = 1.0;
  Index center = 0;
  double radius = 0.0;
  double theta = 0.0;
  double shift = 0.0;
  double rho = 0.0;
  std::string label;
};

struct FamilyMember {
  std::string label;
  ScalarField field;
};

// Deterministic admissible family, generated member by member so that huge
// 1-D grids never hold more than one field.
class TestFamily {
 public:
  TestFamily(const HardyContext& ctx, double p, std::size_t count, std::uint64_t seed);
  std::size_t size() const { return specs_.size(); }
  const MemberSpec& spec(std::size_t i) const { return specs_[i]; }
  FamilyMember member(std::size_t i) const;
  std::string label() const;

 private:
  const HardyContext* ctx_;
  double p_;
  std::uint64_t seed_;
  std::vector<MemberSpec> specs_;
};

std::vector<FamilyMember> test_family(const HardyContext& ctx, double p, std::size_t count, std::uint64_t seed);

struct PointwiseResult {
  ScalarField ratio;
  double sup = 0.0;
  double p999 = 0.0;
  Index argmax = 0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // L·d ball leaves the box
  std::size_t flagged = 0;   // nonzero numerator, zero denominator
};

struct PointwiseOptions {
  double L = 2.0;
  double alpha = 0.0;
  bool boundary_distance = false;
  int threads = 1;
};

// |u(x)| / (d(x)^{1-α/p} (M_{α, L d(x)} g_u^p(x))^{1/p}); α = 0 is the
// pointwise Hardy ratio.
PointwiseResult pointwise_hardy_check(const HardyContext& ctx, const ScalarField& u, double p,
                                      const PointwiseOptions& options = {});
PointwiseResult fractional_pointwise_check(const HardyContext& ctx, const ScalarField& u, double p, double alpha,
                                           double L = 20.0, int threads = 1);

struct RatioResult {
  double ratio = 0.0;
  bool violation = false;
  bool excluded = false;  // dilated ball leaves the box
};

// ∫_B |u|^p / (r^p ∫_{5B} g_u^p), B = B(w, r), w ∈ Ω^c.
RatioResult condition_b_check(const HardyContext& ctx, const ScalarField& u, double p, Index w, double r);
RatioResult condition_b_check(const HardyContext& ctx, const ScalarField& u, const std::vector<double>& gp, double p,
                              Index w, double r);

// |u_{B_x}|^p / (d(x)^p ⨍_{20 B_x} g_u^p), B_x = B(x, d(x)).
RatioResult condition_c_check(const HardyContext& ctx, const ScalarField& u, double p, Index x);
RatioResult condition_c_check(const HardyContext& ctx, const ScalarField& u, const std::vector<double>& gp, double p,
                              Index x);

// ∫_Ω |u|^p d^{-p} / ∫ g_u^p (the gradient integral runs over the box).
double integral_hardy_quotient(const HardyContext& ctx, const ScalarField& u, double p);

struct LayerTerm {
  int k = 0;
  double lhs = 0.0;  // 2^{k(p+β)} ∫_{Ω_k} |w|^p
  double rhs = 0.0;  // 2^{kβ} ∫_{Ω_k} g_w^p
  double layer_constant = 0.0;  // 2^{kp} ∫_{Ω_k}|w|^p / ∫_{Ω̃_{k-2}} g_w^p
};

struct MemberTrace {
  std::string label;
  std::vector<LayerTerm> layers;
  double layered_constant = 0.0;  // β Σ lhs / Σ rhs
  double quotient = 0.0;          // integral Hardy quotient of the member
  double partition_gap = 0.0;     // |Σ_k ∫_{Ω_k} - ∫_Ω| / ∫_Ω for |u|^p d^{-p}
};

struct WannebroTrace {
  double p = 0.0;
  double beta = 0.0;
  double condition_b_constant = 0.0;
  double layered_constant = 0.0;  // C_b′
  double final_hardy_constant = 0.0;
  bool absorption_closes = false;  // C_b β^{p-1} / p^p ≤ 1/2
  bool certified = false;          // every quotient ≤ final constant
  double max_quotient = 0.0;
  std::vector<MemberTrace> members;
};

double wannebo_beta(double p, double C_b);

WannebroTrace wannebo_pipeline(const HardyContext& ctx, double p, double C_b, const TestFamily& family, int threads = 1);

struct LevelSetSample {
  Index w = 0;
  double R = 0.0;
  double v_mean = 0.0;      // v_B
  bool poincare_branch = false;  // v_B > 2 C₁: the proof closes by Poincaré instead
  double mu_E = 0.0;
  double mu_B = 0.0;
  bool eka_holds = false;   // μ(E) ≥ C₁ μ(B)
  double pointwise_constant = 0.0;  // measured on u over E
  std::size_t cover_size = 0;
  double implied_lower = 0.0;  // μ(B) R^{-p} / K from the covering chain
  double solved_capacity = 0.0;
  bool goal_holds = false;     // implied_lower ≤ solved·(1 + tol)
};

struct LevelSetReport {
  double p = 0.0;
  double L = 0.0;
  double l = 0.0;
  double C1 = 0.0;
  std::vector<LevelSetSample> samples;
  std::size_t excluded = 0;
  bool all_eka = true;
  bool all_goal = true;
};

inline double level_set_l(double L) { return 1.0 / (2.0 * (L + 1.0)); }
double level_set_C1(double L, int n);

LevelSetReport fatness_from_pointwise_experiment(const HardyContext& ctx, double p, double L,
                                                 std::size_t max_samples = 8, const SolveOptions& solve = {},
                                                 int threads = 1);

std::vector<double> gradient_power(const ScalarField& u, double p);

struct HardyOptions {
  double L = 2.0;
  bool boundary_distance = false;
  std::size_t max_balls = 64;   // condition (b) centres
  std::size_t max_points = 64;  // condition (c) centres
  int threads = 1;
};

struct HardyReport {
  std::string domain_label;
  double p = 0.0;
  double L = 0.0;
  double pointwise_constant = 0.0;
  double pointwise_p999 = 0.0;
  double integral_quotient = 0.0;
  double condition_b_constant = 0.0;
  double condition_c_constant = 0.0;
  std::string test_family_label;
  std::string pointwise_argmax_member;
  std::size_t excluded = 0;
  std::size_t flagged = 0;
  std::size_t violations = 0;
};

// Suite constants: sup over the family and the sampled balls/points.
HardyReport hardy_report(const HardyContext& ctx, double p, const TestFamily& family, const HardyOptions& options = {});

}  // namespace hardylab
