#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "hardylab/capacity.hpp"
#include "hardylab/content.hpp"
#include "hardylab/fatness.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/harness.hpp"
#include "hardylab/maximal.hpp"
#include "hardylab/serialize.hpp"
#include "hardylab/verify.hpp"

using namespace hardylab;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kVerifyFailed = 1, kUsage = 2, kModuleError = 3;

struct DomainArgs {
  std::string domain;
  int resolution = 0;
  int dim = 0;
  std::map<std::string, double> params;
};

void add_domain_options(CLI::App* cmd, DomainArgs& d) {
  cmd->add_option("domain", d.domain, "domain spec file or family name")->required();
  cmd->add_option("--resolution", d.resolution, "cells per unit length");
  cmd->add_option("--dim", d.dim, "spatial dimension");
  cmd->add_option("--param", d.params, "family parameter, key value")->take_all();
}

GridDomain domain_from(const DomainArgs& a, int resolution_scale = 1) {
  DomainSpec spec;
  if (std::filesystem::is_regular_file(a.domain)) {
    spec = load_domain_spec(a.domain);
  } else {
    spec.family = a.domain;
  }
  if (a.resolution > 0) spec.resolution = a.resolution;
  if (a.dim > 0) spec.dim = a.dim;
  for (const auto& [k, v] : a.params) spec.params[k] = v;
  spec.resolution *= resolution_scale;
  return build_domain(spec);
}

ordered_json parse_json(const std::string& text) { return ordered_json::parse(text); }

void print(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<int> threads) {
  ExperimentConfig config = path == "default" ? parse_config(default_config_text()) : load_config(path);
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  const auto report = run_experiment(config, true);
  std::cout << verdict_matrix(report);
  for (const auto& e : report.errors) std::cerr << "error: " << e << '\n';
  for (const auto& v : report.violations) std::cerr << "violation: " << v << '\n';
  std::cerr << "outputs in " << resolve_output_dir(config).string() << '\n';
  return report.exit_code();
}

int cmd_verify(const VerifyOptions& opt, const std::string& fault) {
  if (fault == "maximal-ladder") {
    testing_hooks::set_maximal_ladder_fault(true);
  } else if (!fault.empty()) {
    std::cerr << "unknown fault '" << fault << "'\n";
    return kUsage;
  }
  const auto res = run_verify(opt);
  for (const auto& c : res.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.id;
    if (!c.detail.empty()) std::cout << "  [" << c.detail << ']';
    std::cout << '\n';
  }
  return res.ok() ? kOk : kVerifyFailed;
}

int cmd_capacity(const DomainArgs& a, double p, double radius) {
  const GridDomain dom = domain_from(a);
  const GridShape& s = dom.shape();
  FatnessOptions fo;
  std::vector<double> radii = radius > 0 ? std::vector<double>{radius} : fatness_radii(s, fo);
  const auto centers = complement_centers(dom, radii.back(), 1);
  if (centers.empty()) throw std::runtime_error("domain has no complement cells near its boundary");
  const Index c = centers.front();
  const CellMask comp = dom.complement();
  std::vector<ordered_json> rows(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    ordered_json row;
    row["radius"] = r;
    if (!ball_interior_to_box(s, c, 2.0 * r, false)) {
      row["excluded"] = true;
      rows[k] = row;
      continue;
    }
    const auto num = solve_capacity(ball_condenser(s, comp, c, r, 2.0 * r, p));
    CellMask all(s.size(), 1);
    const auto den = solve_capacity(ball_condenser(s, all, c, r, 2.0 * r, p));
    row["capacity"] = parse_json(to_json(num));
    row["ball_capacity"] = den.value;
    row["ratio"] = num.value / den.value;
    rows[k] = row;
  }
  ordered_json out;
  out["domain"] = dom.name();
  out["p"] = p;
  const Point x = s.center(c);
  out["center"] = ordered_json::array();
  for (int i = 0; i < s.dim(); ++i) out["center"].push_back(x[i]);
  out["radii"] = rows;
  print(out);
  return kOk;
}

int cmd_fatness(const DomainArgs& a, double p, std::size_t max_centers, int threads, const std::string& csv) {
  FatnessOptions fo;
  fo.max_centers = max_centers;
  fo.threads = threads;
  const GridDomain coarse = domain_from(a), fine = domain_from(a, 2);
  const auto pc = fatness_profile(coarse, p, fo);
  const auto pf = fatness_profile(fine, p, fo);
  ordered_json out;
  out["coarse"] = parse_json(to_json(pc));
  out["fine"] = parse_json(to_json(pf));
  out["verdict"] = to_string(fatness_verdict(pc.c0_estimate, pf.c0_estimate));
  print(out);
  if (!csv.empty()) {
    std::ofstream f(csv, std::ios::binary);
    f << fatness_csv(pc);
  }
  return kOk;
}

int cmd_hardy(const DomainArgs& a, double p, const HardyOptions& ho, double alpha, std::size_t family_size,
              std::uint64_t seed) {
  const GridDomain dom = domain_from(a);
  const HardyContext ctx(dom);
  const TestFamily fam(ctx, p, family_size, seed);
  const auto rep = hardy_report(ctx, p, fam, ho);
  ordered_json out = parse_json(to_json(rep));
  out["seed"] = seed;
  if (alpha != 0.0) {
    double sup = 0.0;
    for (std::size_t i = 0; i < fam.size(); ++i)
      sup = std::max(sup, fractional_pointwise_check(ctx, fam.member(i).field, p, alpha, 20.0, ho.threads).sup);
    out["alpha"] = alpha;
    out["fractional_pointwise_constant"] = sup;
  }
  if (p > 1.0 && std::isfinite(rep.condition_b_constant) && rep.condition_b_constant > 0.0)
    out["wannebo"] = parse_json(to_json(wannebo_pipeline(ctx, p, rep.condition_b_constant, fam, ho.threads)));
  print(out);
  return rep.violations == 0 && rep.flagged == 0 ? kOk : kModuleError;
}

int cmd_content(const DomainArgs& a, double t, double R, bool exact) {
  const GridDomain dom = domain_from(a);
  ContentOptions co;
  co.exact = exact;
  const auto E = mask_members(dom.boundary());
  auto est = estimate_content(dom.shape(), E, t, R, co);
  est.set_label = "boundary of " + dom.name();
  std::cout << to_json(est, dom.shape()) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity, maximal-function and Hardy inequality experiments on grids"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  int threads = 0;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads, 0 for all cores")->capture_default_str();

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment config (\"default\" for the built-in suite)");
  run->add_option("config", config_path, "JSON config file")->required();
  std::optional<std::uint64_t> run_seed;
  run->add_option("--seed", run_seed, "override the config seed");

  auto* ver = app.add_subcommand("verify", "run the invariant suite");
  std::string fault;
  ver->add_option("--inject-fault", fault, "test hook: maximal-ladder");
  ver->add_option("--seed", seed, "random seed");

  DomainArgs cap_args, fat_args, hardy_args, content_args;
  double p = 2.0, t = 1.0, R = 0.25, radius = 0.0;

  auto* cap = app.add_subcommand("capacity", "condenser capacities of the complement at one boundary point");
  add_domain_options(cap, cap_args);
  cap->add_option("p", p, "exponent")->required();
  cap->add_option("--radius", radius, "single radius instead of the fatness ladder");
  cap->add_option("--seed", seed, "random seed");

  auto* fat = app.add_subcommand("fatness", "fatness profile at h and h/2 with verdict");
  add_domain_options(fat, fat_args);
  fat->add_option("p", p, "exponent")->required();
  std::size_t max_centers = 32;
  std::string csv_path;
  fat->add_option("--max-centers", max_centers, "sampled complement centers");
  fat->add_option("--csv", csv_path, "write the coarse profile as CSV");
  fat->add_option("--seed", seed, "random seed");

  auto* hardy = app.add_subcommand("hardy", "pointwise and integral Hardy constants over the test family");
  add_domain_options(hardy, hardy_args);
  hardy->add_option("p", p, "exponent")->required();
  HardyOptions ho;
  double alpha = 0.0;
  std::size_t family_size = 12;
  hardy->add_option("--L", ho.L, "dilatation of the maximal-function cap");
  hardy->add_option("--alpha", alpha, "fractional order, L = 20");
  hardy->add_flag("--boundary-distance", ho.boundary_distance, "use the distance to the boundary");
  hardy->add_option("--family-size", family_size, "test family size");
  hardy->add_option("--seed", seed, "random seed");

  auto* content = app.add_subcommand("content", "codimension-t content of the domain boundary");
  add_domain_options(content, content_args);
  content->add_option("t", t, "codimension")->required();
  content->add_option("R", R, "largest cover radius")->required();
  bool no_exact = false;
  content->add_flag("--no-exact", no_exact, "skip the exhaustive optimum");
  content->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << '\n';
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(config_path, run_seed, threads ? std::optional<int>(threads) : std::nullopt);
    if (*ver) return cmd_verify({seed, threads}, fault);
    if (*cap) return cmd_capacity(cap_args, p, radius);
    if (*fat) return cmd_fatness(fat_args, p, max_centers, threads, csv_path);
    if (*hardy) {
      ho.threads = threads;
      return cmd_hardy(hardy_args, p, ho, alpha, family_size, seed);
    }
    if (*content) return cmd_content(content_args, t, R, !no_exact);
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kModuleError;
  }
  return kUsage;
}
