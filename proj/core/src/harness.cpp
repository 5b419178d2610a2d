#include "hardylab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hardylab/content.hpp"
#include "hardylab/fatness.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/serialize.hpp"
#include "json_util.hpp"

namespace hardylab {

using detail::num;
using detail::ordered_json;

namespace {

const std::set<std::string> kConfigKeys = {"domains",     "p",         "L",         "resolutions", "family_size",
                                           "seed",        "output_dir", "threads",  "max_centers", "density_q",
                                           "density_L",   "thresholds"};

template <class T>
std::vector<T> list_of(const ordered_json& j, const char* key) {
  if (!j.is_array() || j.empty()) throw SpecError(std::string("config: '") + key + "' must be a non-empty list");
  std::vector<T> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw SpecError(std::string("config: '") + key + "' entries must be numbers");
    out.push_back(x.get<T>());
  }
  return out;
}

DomainSpec domain_from_json(const ordered_json& j) {
  DomainSpec spec;
  if (j.is_string()) {
    spec.family = j.get<std::string>();
    return spec;
  }
  if (!j.is_object()) throw SpecError("config: each domain is a family name or an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "family" && v.is_string()) {
      spec.family = v.get<std::string>();
    } else if (k == "dim" && v.is_number_integer()) {
      spec.dim = v.get<int>();
    } else if (k == "params" && v.is_object()) {
      for (const auto& [pk, pv] : v.items()) {
        if (!pv.is_number()) throw SpecError("config: domain parameter '" + pk + "' must be a number");
        spec.params[pk] = pv.get<double>();
      }
    } else {
      throw SpecError("config: bad domain field '" + k + "'");
    }
  }
  if (spec.family.empty()) throw SpecError("config: domain without 'family'");
  return spec;
}

std::string domain_key(const DomainSpec& spec) {
  std::ostringstream os;
  os << spec.family << "(n=" << spec.dim;
  for (const auto& [k, v] : spec.params) os << ',' << k << '=' << format_double(v);
  os << ')';
  return os.str();
}

std::string write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  return path.string();
}

std::string tag(double p, double L) { return "p" + format_double(p) + "_L" + format_double(L); }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw SpecError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SpecError("config: top level must be an object");
  for (const auto& [k, v] : j.items())
    if (!kConfigKeys.count(k)) throw SpecError("config: unknown key '" + k + "'");
  if (!j.contains("domains") || !j["domains"].is_array() || j["domains"].empty())
    throw SpecError("config: 'domains' must list at least one domain");
  ExperimentConfig c;
  for (const auto& d : j["domains"]) c.domains.push_back(domain_from_json(d));
  try {
    if (j.contains("p")) c.p_list = list_of<double>(j["p"], "p");
    if (j.contains("L")) c.L_list = list_of<double>(j["L"], "L");
    if (j.contains("resolutions")) c.resolutions = list_of<int>(j["resolutions"], "resolutions");
    if (j.contains("family_size")) c.family_size = j["family_size"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("max_centers")) c.max_centers = j["max_centers"].get<std::size_t>();
    if (j.contains("density_q")) c.density_q = j["density_q"].get<double>();
    if (j.contains("density_L")) c.density_L = j["density_L"].get<double>();
    if (j.contains("thresholds")) {
      for (const auto& [k, v] : j["thresholds"].items()) {
        if (k == "stable_factor")
          c.thresholds.stable_factor = v.get<double>();
        else if (k == "trend_factor")
          c.thresholds.trend_factor = v.get<double>();
        else if (k == "fatness_floor")
          c.thresholds.fatness_floor = v.get<double>();
        else
          throw SpecError("config: unknown threshold '" + k + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("config: ") + e.what());
  }
  for (double p : c.p_list)
    if (!(p >= 1.0)) throw SpecError("config: every p must be at least 1");
  for (double L : c.L_list)
    if (!(L >= 1.0)) throw SpecError("config: every L must be at least 1");
  for (int r : c.resolutions)
    if (r < 8) throw SpecError("config: resolutions below 8 cells per unit");
  if (c.family_size < 1) throw SpecError("config: family_size must be at least 1");
  if (c.max_centers < 1) throw SpecError("config: max_centers must be at least 1");
  if (!(c.thresholds.stable_factor > 1.0) || !(c.thresholds.trend_factor > 1.0))
    throw SpecError("config: threshold factors must exceed 1");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string default_config_text() {
  return R"({
  "domains": [
    {"family": "half_space", "params": {"extent": 2}},
    {"family": "quarter_space", "params": {"extent": 2}},
    {"family": "cantor_complement", "params": {"lambda": 0.3333333333333333, "depth": 4}},
    {"family": "annulus"},
    {"family": "punctured_ball"}
  ],
  "p": [2],
  "L": [2],
  "resolutions": [32, 64, 128],
  "family_size": 12,
  "seed": 1,
  "output_dir": "hardylab-out",
  "threads": 0,
  "max_centers": 32,
  "density_q": 1,
  "density_L": 2
}
)";
}

std::string to_string(Trend t) {
  switch (t) {
    case Trend::stable:
      return "stable";
    case Trend::decaying:
      return "decaying";
    case Trend::diverging:
      return "diverging";
    case Trend::drifting:
      return "drifting";
    default:
      return "undetermined";
  }
}

Trend classify_trend(const std::vector<double>& v, const Thresholds& th) {
  if (v.size() < 2) return Trend::undetermined;
  for (double x : v)
    if (std::isnan(x)) return Trend::undetermined;
  if (std::isinf(v.back())) return Trend::diverging;
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (std::isinf(v[i])) return Trend::drifting;
    if (v[i] == 0.0)
      r.push_back(v[i + 1] == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    else
      r.push_back(v[i + 1] / v[i]);
  }
  const bool stable = std::all_of(r.begin(), r.end(), [&](double x) {
    return x <= th.stable_factor && x >= 1.0 / th.stable_factor;
  });
  if (stable) return Trend::stable;
  if (r.size() >= 2) {
    if (std::all_of(r.begin(), r.end(), [&](double x) { return x >= th.trend_factor; })) return Trend::diverging;
    if (std::all_of(r.begin(), r.end(), [&](double x) { return x <= 1.0 / th.trend_factor; })) return Trend::decaying;
  }
  return Trend::drifting;
}

int EquivalenceReport::exit_code() const { return errors.empty() && violations.empty() ? 0 : 3; }

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("HARDYLAB_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

EquivalenceReport run_experiment(const ExperimentConfig& config, bool write) {
  EquivalenceReport rep;
  rep.seed = config.seed;
  std::filesystem::path out_dir, prof_dir;
  if (write) {
    out_dir = resolve_output_dir(config);
    prof_dir = out_dir / "profiles";
    std::filesystem::create_directories(prof_dir);
  }
  std::vector<int> res = config.resolutions;
  std::sort(res.begin(), res.end());
  res.erase(std::unique(res.begin(), res.end()), res.end());

  for (const DomainSpec& base : config.domains) {
    for (int r : res) {
      DomainSpec spec = base;
      spec.resolution = r;
      std::optional<GridDomain> dom;
      std::string build_error;
      try {
        dom.emplace(build_domain(spec));
      } catch (const std::exception& e) {
        build_error = e.what();
      }
      std::string key;
      if (dom) {
        // key from the built label so the default dimension is filled in
        spec.dim = dom->shape().dim();
      }
      key = domain_key(spec);

      std::optional<HardyContext> ctx;
      double density = std::numeric_limits<double>::quiet_NaN();
      std::string density_error;
      if (dom) {
        ctx.emplace(*dom);
        try {
          DensityOptions dopt;
          dopt.max_centers = config.max_centers;
          dopt.threads = config.threads;
          const auto floor = inner_density_check(*dom, config.density_q, config.density_L, dopt);
          density = floor.min_value;
          if (write)
            write_file(prof_dir / ("density_" + file_stem(dom->name()) + ".csv"), density_csv(floor, dom->shape()));
        } catch (const std::exception& e) {
          density_error = std::string("inner_density_check: ") + e.what();
        }
      }

      for (double p : config.p_list) {
        double c0 = std::numeric_limits<double>::quiet_NaN();
        std::string fat_error;
        if (dom) {
          try {
            FatnessOptions fo;
            fo.max_centers = config.max_centers;
            fo.threads = config.threads;
            const auto prof = fatness_profile(*dom, p, fo);
            c0 = prof.c0_estimate;
            if (write)
              write_file(prof_dir / ("fatness_" + file_stem(dom->name()) + "_p" + file_stem(format_double(p)) + ".csv"),
                         fatness_csv(prof));
          } catch (const std::exception& e) {
            fat_error = std::string("fatness_profile: ") + e.what();
          }
        }
        for (double L : config.L_list) {
          EquivalenceRow row;
          row.family = key;
          row.domain = dom ? dom->name() : domain_label(spec);
          row.p = p;
          row.L = L;
          row.resolution = r;
          row.h = 1.0 / r;
          row.c0 = c0;
          row.inner_density = density;
          row.condition_b = row.condition_c = row.pointwise = row.pointwise_p999 = row.integral_quotient =
              std::numeric_limits<double>::quiet_NaN();
          if (!build_error.empty()) row.errors.push_back("build_domain: " + build_error);
          if (!fat_error.empty()) row.errors.push_back(fat_error);
          if (!density_error.empty()) row.errors.push_back(density_error);
          if (dom) {
            try {
              TestFamily fam(*ctx, p, config.family_size, config.seed);
              HardyOptions ho;
              ho.L = L;
              ho.max_balls = config.max_centers;
              ho.max_points = config.max_centers;
              ho.threads = config.threads;
              const auto hr = hardy_report(*ctx, p, fam, ho);
              row.condition_b = hr.condition_b_constant;
              row.condition_c = hr.condition_c_constant;
              row.pointwise = hr.pointwise_constant;
              row.pointwise_p999 = hr.pointwise_p999;
              row.integral_quotient = hr.integral_quotient;
              row.excluded = hr.excluded;
              if (hr.flagged > 0)
                row.violations.push_back("pointwise_hardy_check: " + std::to_string(hr.flagged) +
                                         " cells with nonzero numerator and zero denominator");
              if (hr.violations > 0)
                row.violations.push_back("condition checks: " + std::to_string(hr.violations) +
                                         " balls with zero gradient mass under nonzero u");
              if (p > 1.0 && hr.condition_b_constant > 0.0 && std::isfinite(hr.condition_b_constant)) {
                const auto tr = wannebo_pipeline(*ctx, p, hr.condition_b_constant, fam, config.threads);
                row.wannebo_constant = tr.final_hardy_constant;
                row.wannebo_beta = tr.beta;
                if (!tr.certified)
                  row.violations.push_back("wannebo_pipeline: certified constant below an observed quotient");
                if (!tr.absorption_closes) row.violations.push_back("wannebo_pipeline: absorption does not close");
                for (const auto& m : tr.members)
                  if (m.partition_gap > 1e-10) {
                    row.violations.push_back("wannebo_pipeline: layer partition gap " + format_double(m.partition_gap) +
                                             " for " + m.label);
                    break;
                  }
                if (write)
                  write_file(prof_dir / ("wannebo_" + file_stem(dom->name()) + "_" + file_stem(tag(p, L)) + ".csv"),
                             layer_csv(tr));
              }
            } catch (const std::exception& e) {
              row.errors.push_back(std::string("hardy_lab: ") + e.what());
            }
          }
          for (const auto& e : row.errors) rep.errors.push_back(row.domain + " p=" + format_double(p) + ": " + e);
          for (const auto& v : row.violations)
            rep.violations.push_back(row.domain + " p=" + format_double(p) + " L=" + format_double(L) + ": " + v);
          rep.rows.push_back(std::move(row));
        }
      }
    }
  }

  // Trends per (domain, p, L) across resolutions.
  std::map<std::tuple<std::string, double, double>, std::vector<const EquivalenceRow*>> groups;
  std::vector<std::tuple<std::string, double, double>> order;
  for (const auto& row : rep.rows) {
    auto k = std::make_tuple(row.family, row.p, row.L);
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&row);
  }
  const std::vector<std::string> metrics = {"c0",         "condition_b",       "condition_c",     "pointwise",
                                            "integral_quotient", "wannebo_constant", "inner_density"};
  for (const auto& k : order) {
    const auto& rows = groups[k];
    std::map<std::string, Trend> got;
    for (const auto& m : metrics) {
      TrendEntry te;
      te.family = std::get<0>(k);
      te.p = std::get<1>(k);
      te.L = std::get<2>(k);
      te.metric = m;
      bool present = true;
      for (const auto* row : rows) {
        double v;
        if (m == "c0")
          v = row->c0;
        else if (m == "condition_b")
          v = row->condition_b;
        else if (m == "condition_c")
          v = row->condition_c;
        else if (m == "pointwise")
          v = row->pointwise;
        else if (m == "integral_quotient")
          v = row->integral_quotient;
        else if (m == "wannebo_constant") {
          present = present && row->wannebo_constant.has_value();
          v = row->wannebo_constant.value_or(std::numeric_limits<double>::quiet_NaN());
        } else
          v = row->inner_density;
        te.values.push_back(v);
      }
      te.trend = present ? classify_trend(te.values, config.thresholds) : Trend::undetermined;
      if (m == "c0" && te.trend == Trend::stable)
        for (double v : te.values)
          if (v < config.thresholds.fatness_floor) te.trend = Trend::decaying;
      got[m] = te.trend;
      rep.trends.push_back(std::move(te));
    }
    const Trend a = got["c0"], d = got["pointwise"];
    const bool a_bad = a == Trend::decaying || a == Trend::diverging;
    const bool d_bad = d == Trend::decaying || d == Trend::diverging;
    if ((a == Trend::stable && d_bad) || (a_bad && d == Trend::stable))
      rep.anomalies.push_back(std::get<0>(k) + " " + tag(std::get<1>(k), std::get<2>(k)) + ": fatness " +
                              to_string(a) + " but pointwise " + to_string(d));
  }

  if (write) {
    write_file(out_dir / "summary.csv", summary_csv(rep));
    write_file(out_dir / "trends.csv", trends_csv(rep));
    write_file(out_dir / "report.json", report_json(rep));
    write_file(out_dir / "verdicts.txt", verdict_matrix(rep));
  }
  return rep;
}

namespace {

std::string opt_num(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string summary_csv(const EquivalenceReport& rep) {
  std::string out = "# seed=" + std::to_string(rep.seed) + "\r\n";
  out += csv_row({"domain", "label", "p", "L", "resolution", "h", "c0", "condition_b", "condition_c", "pointwise",
                  "pointwise_p999", "integral_quotient", "wannebo_constant", "wannebo_beta", "inner_density",
                  "excluded", "status"});
  for (const auto& r : rep.rows) {
    std::string status = "ok";
    if (!r.errors.empty())
      status = "error";
    else if (!r.violations.empty())
      status = "violation";
    out += csv_row({r.family, r.domain, format_double(r.p), format_double(r.L), std::to_string(r.resolution),
                    format_double(r.h), format_double(r.c0), format_double(r.condition_b), format_double(r.condition_c),
                    format_double(r.pointwise), format_double(r.pointwise_p999), format_double(r.integral_quotient),
                    opt_num(r.wannebo_constant), opt_num(r.wannebo_beta), format_double(r.inner_density),
                    std::to_string(r.excluded), status});
  }
  return out;
}

std::string trends_csv(const EquivalenceReport& rep) {
  std::string out = "# seed=" + std::to_string(rep.seed) + "\r\n";
  out += csv_row({"domain", "p", "L", "metric", "values", "trend"});
  for (const auto& t : rep.trends) {
    std::string vals;
    for (std::size_t i = 0; i < t.values.size(); ++i) vals += (i ? ";" : "") + format_double(t.values[i]);
    out += csv_row({t.family, format_double(t.p), format_double(t.L), t.metric, vals, to_string(t.trend)});
  }
  return out;
}

std::string report_json(const EquivalenceReport& rep) {
  ordered_json j;
  j["seed"] = rep.seed;
  ordered_json rows = ordered_json::array();
  for (const auto& r : rep.rows) {
    ordered_json rj;
    rj["domain"] = r.family;
    rj["label"] = r.domain;
    rj["p"] = num(r.p);
    rj["L"] = num(r.L);
    rj["resolution"] = r.resolution;
    rj["h"] = num(r.h);
    rj["c0"] = num(r.c0);
    rj["condition_b"] = num(r.condition_b);
    rj["condition_c"] = num(r.condition_c);
    rj["pointwise"] = num(r.pointwise);
    rj["pointwise_p999"] = num(r.pointwise_p999);
    rj["integral_quotient"] = num(r.integral_quotient);
    rj["wannebo_constant"] = r.wannebo_constant ? num(*r.wannebo_constant) : ordered_json(nullptr);
    rj["wannebo_beta"] = r.wannebo_beta ? num(*r.wannebo_beta) : ordered_json(nullptr);
    rj["inner_density"] = num(r.inner_density);
    rj["excluded"] = r.excluded;
    rj["errors"] = r.errors;
    rj["violations"] = r.violations;
    rows.push_back(rj);
  }
  j["rows"] = rows;
  ordered_json trends = ordered_json::array();
  for (const auto& t : rep.trends) {
    ordered_json vals = ordered_json::array();
    for (double v : t.values) vals.push_back(num(v));
    trends.push_back({{"domain", t.family},
                      {"p", num(t.p)},
                      {"L", num(t.L)},
                      {"metric", t.metric},
                      {"values", vals},
                      {"trend", to_string(t.trend)}});
  }
  j["trends"] = trends;
  j["anomalies"] = rep.anomalies;
  j["errors"] = rep.errors;
  j["violations"] = rep.violations;
  return j.dump(2) + "\n";
}

std::string verdict_matrix(const EquivalenceReport& rep) {
  const std::vector<std::pair<std::string, std::string>> cols = {
      {"c0", "(a) fat"},          {"condition_b", "(b)"},         {"condition_c", "(c)"},
      {"pointwise", "(d) ptw"},   {"integral_quotient", "integral"}, {"wannebo_constant", "wannebo"},
      {"inner_density", "density"}};
  std::map<std::tuple<std::string, double, double>, std::map<std::string, Trend>> cells;
  std::vector<std::tuple<std::string, double, double>> order;
  for (const auto& t : rep.trends) {
    auto k = std::make_tuple(t.family, t.p, t.L);
    if (!cells.count(k)) order.push_back(k);
    cells[k][t.metric] = t.trend;
  }
  std::size_t w0 = 6;
  for (const auto& k : order) w0 = std::max(w0, std::get<0>(k).size() + 1 + tag(std::get<1>(k), std::get<2>(k)).size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::ostringstream os;
  os << "seed=" << rep.seed << "\n";
  os << pad("domain", w0);
  for (const auto& c : cols) os << "  " << pad(c.second, 12);
  os << "\n";
  for (const auto& k : order) {
    os << pad(std::get<0>(k) + " " + tag(std::get<1>(k), std::get<2>(k)), w0);
    for (const auto& c : cols) {
      auto it = cells[k].find(c.first);
      os << "  " << pad(it == cells[k].end() ? "-" : to_string(it->second), 12);
    }
    os << "\n";
  }
  os << "anomalies: " << rep.anomalies.size() << "\n";
  for (const auto& a : rep.anomalies) os << "  " << a << "\n";
  os << "errors: " << rep.errors.size() << "\n";
  for (const auto& e : rep.errors) os << "  " << e << "\n";
  os << "violations: " << rep.violations.size() << "\n";
  for (const auto& v : rep.violations) os << "  " << v << "\n";
  return os.str();
}

}  // namespace hardylab
