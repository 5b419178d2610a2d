#include "hardylab/serialize.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "json_util.hpp"

namespace hardylab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

std::string file_stem(std::string_view label) {
  std::string out;
  bool sep = false;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    if (ok) {
      if (sep && !out.empty()) out += '_';
      sep = false;
      out += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    } else {
      sep = true;
    }
  }
  return out.empty() ? "unnamed" : out;
}

namespace detail {

ordered_json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

ordered_json json_of(const CapacityResult& r) {
  ordered_json j;
  j["value"] = num(r.value);
  j["iterations"] = r.iterations;
  j["residual"] = num(r.residual);
  j["flags"] = r.flags();
  return j;
}

ordered_json json_of(const FatnessProfile& f) {
  ordered_json j;
  j["set"] = f.set_label;
  j["p"] = num(f.p);
  j["c0_estimate"] = num(f.c0_estimate);
  ordered_json radii = ordered_json::array();
  for (double r : f.radii_ladder) radii.push_back(num(r));
  j["radii_ladder"] = radii;
  j["samples"] = f.samples.size();
  j["excluded"] = f.excluded;
  j["warnings"] = f.warnings;
  return j;
}

ordered_json json_of(const HardyReport& r) {
  ordered_json j;
  j["domain"] = r.domain_label;
  j["p"] = num(r.p);
  j["L"] = num(r.L);
  j["pointwise_constant"] = num(r.pointwise_constant);
  j["pointwise_p999"] = num(r.pointwise_p999);
  j["pointwise_argmax_member"] = r.pointwise_argmax_member;
  j["integral_quotient"] = num(r.integral_quotient);
  j["condition_b_constant"] = num(r.condition_b_constant);
  j["condition_c_constant"] = num(r.condition_c_constant);
  j["test_family"] = r.test_family_label;
  j["excluded"] = r.excluded;
  j["flagged"] = r.flagged;
  j["violations"] = r.violations;
  return j;
}

ordered_json json_of(const WannebroTrace& t) {
  ordered_json j;
  j["p"] = num(t.p);
  j["beta"] = num(t.beta);
  j["condition_b_constant"] = num(t.condition_b_constant);
  j["layered_constant"] = num(t.layered_constant);
  j["final_hardy_constant"] = num(t.final_hardy_constant);
  j["absorption_closes"] = t.absorption_closes;
  j["certified"] = t.certified;
  j["max_quotient"] = num(t.max_quotient);
  ordered_json members = ordered_json::array();
  for (const auto& m : t.members) {
    ordered_json mj;
    mj["label"] = m.label;
    mj["quotient"] = num(m.quotient);
    mj["layered_constant"] = num(m.layered_constant);
    mj["partition_gap"] = num(m.partition_gap);
    ordered_json layers = ordered_json::array();
    for (const auto& l : m.layers)
      layers.push_back({{"k", l.k}, {"lhs", num(l.lhs)}, {"rhs", num(l.rhs)}, {"layer_constant", num(l.layer_constant)}});
    mj["layer_terms"] = layers;
    members.push_back(mj);
  }
  j["members"] = members;
  return j;
}

ordered_json json_of(const LevelSetReport& r) {
  ordered_json j;
  j["p"] = num(r.p);
  j["L"] = num(r.L);
  j["l"] = num(r.l);
  j["C1"] = num(r.C1);
  j["excluded"] = r.excluded;
  j["all_eka"] = r.all_eka;
  j["all_goal"] = r.all_goal;
  ordered_json s = ordered_json::array();
  for (const auto& x : r.samples)
    s.push_back({{"w", x.w},
                 {"R", num(x.R)},
                 {"v_mean", num(x.v_mean)},
                 {"poincare_branch", x.poincare_branch},
                 {"mu_E", num(x.mu_E)},
                 {"mu_B", num(x.mu_B)},
                 {"eka_holds", x.eka_holds},
                 {"pointwise_constant", num(x.pointwise_constant)},
                 {"cover_size", x.cover_size},
                 {"implied_lower", num(x.implied_lower)},
                 {"solved_capacity", num(x.solved_capacity)},
                 {"goal_holds", x.goal_holds}});
  j["samples"] = s;
  return j;
}

ordered_json json_of(const ContentEstimate& e, const GridShape& shape) {
  ordered_json j;
  j["set"] = e.set_label;
  j["t"] = num(e.t);
  j["R"] = num(e.R);
  j["upper_value"] = num(e.upper_value);
  j["lower_value"] = e.lower_value ? num(*e.lower_value) : ordered_json(nullptr);
  ordered_json balls = ordered_json::array();
  for (const auto& b : e.witness.balls) {
    const Point c = shape.center(b.center);
    ordered_json cj = ordered_json::array();
    for (int a = 0; a < shape.dim(); ++a) cj.push_back(num(c[a]));
    balls.push_back({{"center", cj}, {"radius", num(b.radius)}, {"cost", num(b.cost)}});
  }
  j["witness"] = balls;
  return j;
}

ordered_json json_of(const DensityFloor& f) {
  ordered_json j;
  j["q"] = num(f.q);
  j["min_value"] = num(f.min_value);
  j["samples"] = f.samples.size();
  j["excluded"] = f.excluded;
  return j;
}

}  // namespace detail

std::string to_json(const CapacityResult& r) { return detail::json_of(r).dump(2); }
std::string to_json(const FatnessProfile& f) { return detail::json_of(f).dump(2); }
std::string to_json(const HardyReport& r) { return detail::json_of(r).dump(2); }
std::string to_json(const WannebroTrace& t) { return detail::json_of(t).dump(2); }
std::string to_json(const LevelSetReport& r) { return detail::json_of(r).dump(2); }
std::string to_json(const ContentEstimate& e, const GridShape& shape) { return detail::json_of(e, shape).dump(2); }
std::string to_json(const DensityFloor& f) { return detail::json_of(f).dump(2); }

std::string fatness_csv(const FatnessProfile& f) {
  std::string out = csv_row({"x", "y", "z", "radius", "numerator", "denominator", "ratio", "non_converged"});
  for (const auto& s : f.samples)
    out += csv_row({format_double(s.coords[0]), format_double(s.coords[1]), format_double(s.coords[2]),
                    format_double(s.radius), format_double(s.numerator), format_double(s.denominator),
                    format_double(s.ratio), s.non_converged ? "1" : "0"});
  return out;
}

std::string density_csv(const DensityFloor& f, const GridShape& shape) {
  std::string out = csv_row({"q", "x", "y", "z", "scale", "content", "value"});
  for (const auto& s : f.samples) {
    const Point c = shape.center(s.center);
    out += csv_row({format_double(f.q), format_double(c[0]), format_double(c[1]), format_double(c[2]),
                    format_double(s.scale), format_double(s.content), format_double(s.value)});
  }
  return out;
}

std::string layer_csv(const WannebroTrace& t) {
  std::string out = csv_row({"member", "k", "lhs", "rhs", "layer_constant"});
  for (const auto& m : t.members)
    for (const auto& l : m.layers)
      out += csv_row({m.label, std::to_string(l.k), format_double(l.lhs), format_double(l.rhs),
                      format_double(l.layer_constant)});
  return out;
}

}  // namespace hardylab
