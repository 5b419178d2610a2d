#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hardylab/hardy.hpp"
#include "util.hpp"

namespace hardylab {

double wannebo_beta(double p, double C_b) {
  if (!(p > 1.0)) throw std::invalid_argument("wannebo: the pipeline requires p > 1");
  if (!(C_b > 0.0) || !std::isfinite(C_b)) throw std::invalid_argument("wannebo: C_b must be positive and finite");
  return std::min(0.5, std::pow(std::pow(p, p) / (2.0 * C_b), 1.0 / (p - 1.0)));
}

namespace {

MemberTrace trace_member(const HardyContext& ctx, double p, double beta, const FamilyMember& m) {
  const GridDomain& dom = *ctx.domain;
  const GridShape& s = dom.shape();
  const auto& d = ctx.dist.to_complement.values;
  const double cell = s.cell_measure();
  MemberTrace tr;
  tr.label = m.label;
  tr.quotient = integral_hardy_quotient(ctx, m.field, p);

  // u = v d^{β/p}
  ScalarField w(s);
  for (Index i = 0; i < s.size(); ++i)
    if (dom.is_inside(i) && m.field.values[i] != 0.0) w.values[i] = m.field.values[i] * std::pow(d[i], beta / p);
  const auto gw = gradient_power(w, p);

  double global = 0.0;
  for (Index i = 0; i < s.size(); ++i)
    if (dom.is_inside(i) && m.field.values[i] != 0.0) global += std::pow(std::abs(m.field.values[i]) / d[i], p);

  // Complement cells carry the boundary jump; they sit below every layer.
  double outside_g = 0.0;
  for (Index i = 0; i < s.size(); ++i)
    if (!dom.is_inside(i)) outside_g += gw[i];

  const auto& layers = ctx.layers;
  std::vector<double> u_int(layers.size()), g_int(layers.size());
  double partition = 0.0;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    double a = 0.0, g = 0.0, part = 0.0;
    for (Index i : layers[j].cells) {
      a += std::pow(std::abs(w.values[i]), p);
      g += gw[i];
      if (m.field.values[i] != 0.0) part += std::pow(std::abs(m.field.values[i]) / d[i], p);
    }
    u_int[j] = a * cell;
    g_int[j] = g * cell;
    partition += part;
  }
  if (!layers.empty()) g_int.back() += outside_g * cell;
  tr.partition_gap = global > 0.0 ? std::abs(partition - global) / global : 0.0;

  // Ω̃_{k-2}: layers with index ≥ k - 2 (layers are sorted by k).
  std::vector<double> tail(layers.size() + 1, 0.0);
  for (std::size_t j = layers.size(); j-- > 0;) tail[j] = tail[j + 1] + g_int[j];

  double lhs = 0.0, rhs = 0.0;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    LayerTerm t;
    t.k = layers[j].k;
    t.lhs = std::pow(2.0, t.k * (p + beta)) * u_int[j];
    t.rhs = std::pow(2.0, t.k * beta) * g_int[j];
    std::size_t from = j;
    while (from > 0 && layers[from - 1].k >= t.k - 2) --from;
    const double g_tilde = tail[from];
    t.layer_constant = g_tilde > 0.0 ? std::pow(2.0, t.k * p) * u_int[j] / g_tilde : 0.0;
    lhs += t.lhs;
    rhs += t.rhs;
    tr.layers.push_back(t);
  }
  tr.layered_constant = rhs > 0.0 ? beta * lhs / rhs : 0.0;
  return tr;
}

}  // namespace

WannebroTrace wannebo_pipeline(const HardyContext& ctx, double p, double C_b, const TestFamily& family, int threads) {
  WannebroTrace out;
  out.p = p;
  out.beta = wannebo_beta(p, C_b);
  out.condition_b_constant = C_b;
  out.absorption_closes = C_b * std::pow(out.beta, p - 1.0) / std::pow(p, p) <= 0.5 * (1.0 + 1e-12);
  out.members.resize(family.size());
  detail::parallel_for(family.size(), threads,
                       [&](std::size_t k) { out.members[k] = trace_member(ctx, p, out.beta, family.member(k)); });
  for (const auto& m : out.members) {
    out.layered_constant = std::max(out.layered_constant, m.layered_constant);
    out.max_quotient = std::max(out.max_quotient, m.quotient);
  }
  out.final_hardy_constant = 2.0 * out.layered_constant / out.beta;
  out.certified = out.max_quotient <= out.final_hardy_constant;
  return out;
}

}  // namespace hardylab
