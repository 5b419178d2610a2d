#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hardylab/hardy.hpp"
#include "util.hpp"

namespace hardylab {

HardyContext::HardyContext(const GridDomain& d)
    : domain(&d), dist(distance_fields(d)), layers(dyadic_layers(d, dist.to_complement)) {}

namespace {

bool concentrates_at_point_set(const std::string& name) {
  return name.rfind("punctured_ball", 0) == 0 || name.rfind("slit_disk", 0) == 0;
}

struct DistanceRange {
  double lo = 0.0, hi = 0.0;
};

DistanceRange inside_range(const HardyContext& ctx) {
  DistanceRange r{std::numeric_limits<double>::infinity(), 0.0};
  const auto& d = ctx.dist.to_complement.values;
  for (Index i = 0; i < d.size(); ++i)
    if (ctx.domain->is_inside(i)) {
      r.lo = std::min(r.lo, d[i]);
      r.hi = std::max(r.hi, d[i]);
    }
  return r;
}

// 1 on the inner half, cos² fall-off to 0 at the radius.
double plateau(double dist, double radius) {
  if (dist >= radius) return 0.0;
  const double half = 0.5 * radius;
  if (dist <= half) return 1.0;
  const double c = std::cos(0.5 * std::numbers::pi * (dist - half) / half);
  return c * c;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

TestFamily::TestFamily(const HardyContext& ctx, double p, std::size_t count, std::uint64_t seed)
    : ctx_(&ctx), p_(p), seed_(seed) {
  if (count == 0) throw std::invalid_argument("test_family: count must be at least 1");
  const GridDomain& dom = *ctx.domain;
  const GridShape& s = dom.shape();
  const double h = s.h();

  std::vector<MemberSpec> special;
  for (double theta : {0.85, 0.9})
    for (double a : {1.0, 3.0}) {
      MemberSpec m;
      m.kind = MemberKind::hardy_profile;
      m.theta = theta * std::numbers::pi;
      m.shift = a;
      m.label = fmt("log-profile(theta=%.2fpi,a=%g)", theta, a);
      special.push_back(m);
    }
  if (concentrates_at_point_set(dom.name()))
    for (double rho1 : {0.125, 0.25}) {
      MemberSpec m;
      m.kind = MemberKind::capacity_profile;
      m.rho = rho1;
      m.label = fmt("cap-log(rho1=%g)", rho1);
      special.push_back(m);
    }

  // γ = 1 first, then the remaining powers, then special profiles, then
  // bumps and products alternating.
  const std::size_t n_pow = std::max<std::size_t>(1, count / 3);
  std::vector<double> gammas{1.0};
  for (std::size_t j = 1; gammas.size() < n_pow && j <= 2 * n_pow; ++j) {
    const double g = 2.0 * static_cast<double>(j) / static_cast<double>(n_pow + 1);
    if (std::abs(g - 1.0) > 1e-12) gammas.push_back(g);
  }
  for (double g : gammas) {
    MemberSpec m;
    m.kind = MemberKind::power;
    m.gamma = g;
    m.label = fmt("d^%.4g", g);
    specs_.push_back(m);
    if (specs_.size() == count) return;
  }
  for (auto& m : special) {
    specs_.push_back(m);
    if (specs_.size() == count) return;
  }

  std::vector<Index> deep;  // centres far enough from Ω^c to hold a bump
  for (Index i = 0; i < s.size(); ++i)
    if (dom.is_inside(i) && ctx.dist.to_complement.values[i] >= 2.0 * h) deep.push_back(i);
  if (deep.empty())
    for (Index i = 0; i < s.size(); ++i)
      if (dom.is_inside(i)) deep.push_back(i);

  for (std::size_t k = 0; specs_.size() < count; ++k) {
    detail::Rng rng(detail::mix_seed(seed, specs_.size()));
    MemberSpec m;
    m.center = deep[rng.below(deep.size())];
    const double dc = ctx.dist.to_complement.values[m.center];
    if (k % 2 == 0) {
      m.kind = MemberKind::bump;
      m.radius = std::max(h, dc * rng.uniform(0.5, 1.0));
      m.label = fmt("bump(r=%.4g)", m.radius);
    } else {
      m.kind = MemberKind::product;
      m.gamma = gammas[rng.below(gammas.size())];
      m.radius = std::max(2.0 * h, dc * rng.uniform(1.0, 4.0));
      m.label = fmt("d^%.4g*bump(r=%.4g)", m.gamma, m.radius);
    }
    std::ostringstream os;
    os << m.label << "@" << m.center;
    m.label = os.str();
    specs_.push_back(m);
  }
}

std::string TestFamily::label() const {
  std::ostringstream os;
  os << "family(n=" << specs_.size() << ",seed=" << seed_ << ")";
  return os.str();
}

FamilyMember TestFamily::member(std::size_t i) const {
  const MemberSpec& m = specs_.at(i);
  const HardyContext& ctx = *ctx_;
  const GridDomain& dom = *ctx.domain;
  const GridShape& s = dom.shape();
  const auto& d = ctx.dist.to_complement.values;
  FamilyMember out{m.label, ScalarField(s)};
  auto& v = out.field.values;

  switch (m.kind) {
    case MemberKind::power:
      for (Index c = 0; c < s.size(); ++c)
        if (dom.is_inside(c)) v[c] = m.gamma == 1.0 ? d[c] : std::pow(d[c], m.gamma);
      break;
    case MemberKind::hardy_profile: {
      const auto range = inside_range(ctx);
      const double T = std::log(range.hi / range.lo);
      const double e = (p_ - 1.0) / p_;
      for (Index c = 0; c < s.size(); ++c) {
        if (!dom.is_inside(c)) continue;
        const double phase = m.theta * (std::log(d[c] / range.lo) + m.shift) / (T + m.shift);
        v[c] = std::pow(d[c], e) * std::max(0.0, std::sin(phase));
      }
      break;
    }
    case MemberKind::capacity_profile: {
      const auto range = inside_range(ctx);
      const double rho0 = 0.5 * range.lo;
      const double span = std::log(m.rho / rho0);
      for (Index c = 0; c < s.size(); ++c)
        if (dom.is_inside(c)) v[c] = std::clamp(std::log(d[c] / rho0) / span, 0.0, 1.0);
      break;
    }
    case MemberKind::bump:
    case MemberKind::product: {
      const Point pc = s.center(m.center);
      const int dim = s.dim();
      for (Index c = 0; c < s.size(); ++c) {
        if (!dom.is_inside(c)) continue;
        const double r = std::sqrt(squared_distance(s.center(c), pc, dim));
        const double b = plateau(r, m.radius);
        if (b == 0.0) continue;
        v[c] = m.kind == MemberKind::bump ? b : b * std::pow(d[c], m.gamma);
      }
      break;
    }
  }
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, std::abs(x));
  if (mx > 1.0)
    for (double& x : v) x /= mx;
  return out;
}

std::vector<FamilyMember> test_family(const HardyContext& ctx, double p, std::size_t count, std::uint64_t seed) {
  TestFamily fam(ctx, p, count, seed);
  std::vector<FamilyMember> out;
  out.reserve(fam.size());
  for (std::size_t i = 0; i < fam.size(); ++i) out.push_back(fam.member(i));
  return out;
}

}  // namespace hardylab
