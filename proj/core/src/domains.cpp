#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "hardylab/grid.hpp"
#include "json.hpp"

namespace hardylab {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto slash = v.find('/');
  try {
    std::size_t used = 0;
    if (slash != std::string::npos) {
      double a = std::stod(v.substr(0, slash), &used);
      double b = std::stod(v.substr(slash + 1));
      return a / b;
    }
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw SpecError("domain spec: key '" + key + "' has non-numeric value '" + v + "'");
  }
}

void assign(DomainSpec& spec, const std::string& key, const std::string& raw) {
  if (key == "family") {
    spec.family = trim(raw);
  } else if (key == "dim" || key == "n") {
    spec.dim = static_cast<int>(parse_number(key, raw));
  } else if (key == "resolution") {
    spec.resolution = static_cast<int>(std::lround(parse_number(key, raw)));
  } else if (key == "h") {
    double h = parse_number(key, raw);
    if (!(h > 0.0)) throw SpecError("domain spec: h must be positive");
    spec.resolution = static_cast<int>(std::lround(1.0 / h));
  } else {
    spec.params[key] = parse_number(key, raw);
  }
}

}  // namespace

DomainSpec parse_domain_spec(const std::string& text) {
  DomainSpec spec;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw SpecError(std::string("domain spec: invalid JSON: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "params" && it.value().is_object()) {
        for (auto p = it.value().begin(); p != it.value().end(); ++p) {
          if (!p.value().is_number()) throw SpecError("domain spec: param '" + p.key() + "' must be numeric");
          spec.params[p.key()] = p.value().get<double>();
        }
      } else if (it.value().is_string()) {
        assign(spec, it.key(), it.value().get<std::string>());
      } else if (it.value().is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << it.value().get<double>();
        assign(spec, it.key(), os.str());
      } else {
        throw SpecError("domain spec: unsupported value for key '" + it.key() + "'");
      }
    }
  } else {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find_first_of("=:");
      if (eq == std::string::npos)
        throw SpecError("domain spec line " + std::to_string(lineno) + ": expected key = value");
      assign(spec, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
  }
  if (spec.family.empty()) throw SpecError("domain spec: missing 'family'");
  return spec;
}

DomainSpec load_domain_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open domain spec '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_domain_spec(ss.str());
}

std::string domain_label(const DomainSpec& spec) {
  std::ostringstream os;
  os << spec.family << "(n=" << spec.dim << ",h=1/" << spec.resolution;
  for (const auto& [k, v] : spec.params) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    os << ',' << k << '=' << buf;
  }
  os << ')';
  return os.str();
}

namespace {

struct Family {
  int default_dim;
  int min_dim;
  int max_dim;
  std::set<std::string> params;
  std::function<GridDomain(const DomainSpec&, const std::string&)> build;
};

double param(const DomainSpec& s, const std::string& key, double fallback) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}

void check_counts(const Coord& counts, int dim) {
  for (int a = 0; a < dim; ++a)
    if (counts[a] < 8) throw SpecError("resolution below 8 cells per axis");
}

// Box [lo, hi]^n with cell faces on multiples of h.
GridShape face_aligned(int dim, int res, double lo, double hi) {
  const double h = 1.0 / res;
  Coord counts{1, 1, 1};
  Point origin{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    counts[a] = static_cast<int>(std::lround((hi - lo) * res));
    origin[a] = lo;
  }
  check_counts(counts, dim);
  return GridShape(dim, h, counts, origin);
}

// Box whose cell centres sit on multiples of h, cell 0 at -half_cells[a]·h.
GridShape center_aligned(int dim, int res, const std::array<int, 3>& below, const std::array<int, 3>& above) {
  const double h = 1.0 / res;
  Coord counts{1, 1, 1};
  Point origin{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    counts[a] = below[a] + above[a] + 1;
    origin[a] = -(below[a] + 0.5) * h;
  }
  check_counts(counts, dim);
  return GridShape(dim, h, counts, origin);
}

// Integer offsets of a cell relative to the lattice point 0 of a
// center-aligned box.
std::array<long, 3> lattice(const GridShape& s, Index i, const std::array<int, 3>& below) {
  const Coord c = s.coords(i);
  return {c[0] - below[0], c[1] - below[1], c[2] - below[2]};
}

GridDomain sample(const GridShape& s, const std::string& label, const std::function<bool(Index)>& in) {
  CellMask mask(s.size(), 0);
  for (Index i = 0; i < s.size(); ++i) mask[i] = in(i) ? 1 : 0;
  return GridDomain(s, std::move(mask), label, true);
}

GridDomain build_half_space(const DomainSpec& spec, const std::string& label) {
  const double extent = param(spec, "extent", 1.0);
  const double cut = param(spec, "cut", extent / 2.0);
  if (!(extent > 0.0) || !(cut > 0.0 && cut < extent)) throw SpecError("half_space: need 0 < cut < extent");
  GridShape s = face_aligned(spec.dim, spec.resolution, 0.0, extent);
  const int axis = spec.dim - 1;
  return sample(s, label, [&](Index i) { return s.center(i)[axis] > cut; });
}

GridDomain build_quarter_space(const DomainSpec& spec, const std::string& label) {
  const double extent = param(spec, "extent", 1.0);
  const double corner = param(spec, "corner", extent / 2.0);
  if (!(extent > 0.0) || !(corner > 0.0 && corner < extent)) throw SpecError("quarter_space: need 0 < corner < extent");
  GridShape s = face_aligned(spec.dim, spec.resolution, 0.0, extent);
  return sample(s, label, [&](Index i) {
    Point p = s.center(i);
    return p[0] > corner && p[1] > corner;
  });
}

std::array<int, 3> symmetric_half(int dim, int res, double box) {
  std::array<int, 3> k{0, 0, 0};
  for (int a = 0; a < dim; ++a) k[a] = static_cast<int>(std::lround(box * res));
  return k;
}

GridDomain build_punctured_ball(const DomainSpec& spec, const std::string& label) {
  const double box = param(spec, "box", 1.25);
  if (!(box > 1.0)) throw SpecError("punctured_ball: box half-width must exceed 1");
  const auto k = symmetric_half(spec.dim, spec.resolution, box);
  GridShape s = center_aligned(spec.dim, spec.resolution, k, k);
  const double r2 = static_cast<double>(spec.resolution) * spec.resolution;
  return sample(s, label, [&](Index i) {
    auto l = lattice(s, i, k);
    const double sq = static_cast<double>(l[0] * l[0] + l[1] * l[1] + l[2] * l[2]);
    return sq > 0.0 && sq < r2;
  });
}

GridDomain build_slit_disk(const DomainSpec& spec, const std::string& label) {
  const double box = param(spec, "box", 1.25);
  if (!(box > 1.0)) throw SpecError("slit_disk: box half-width must exceed 1");
  const auto k = symmetric_half(2, spec.resolution, box);
  GridShape s = center_aligned(2, spec.resolution, k, k);
  const double r2 = static_cast<double>(spec.resolution) * spec.resolution;
  return sample(s, label, [&](Index i) {
    auto l = lattice(s, i, k);
    const double sq = static_cast<double>(l[0] * l[0] + l[1] * l[1]);
    if (!(sq < r2)) return false;
    return !(l[1] == 0 && l[0] >= 0);
  });
}

GridDomain build_exterior_cusp(const DomainSpec& spec, const std::string& label) {
  const double kappa = param(spec, "kappa", 2.0);
  if (!(kappa > 1.0)) throw SpecError("exterior_cusp: exponent kappa must exceed 1");
  const double box = param(spec, "box", 1.25);
  if (!(box > 1.0)) throw SpecError("exterior_cusp: box half-width must exceed 1");
  const auto k = symmetric_half(2, spec.resolution, box);
  GridShape s = center_aligned(2, spec.resolution, k, k);
  const double h = s.h();
  return sample(s, label, [&](Index i) {
    auto l = lattice(s, i, k);
    const double x = l[0] * h, y = l[1] * h;
    const bool in_cusp = x >= 0.0 && x <= 1.0 && std::abs(y) <= std::pow(x, kappa);
    return !in_cusp;
  });
}

void cantor_intervals(double a, double b, double lambda, int depth, std::vector<std::pair<double, double>>& out) {
  if (depth == 0) {
    out.emplace_back(a, b);
    return;
  }
  const double len = (b - a) * lambda;
  cantor_intervals(a, a + len, lambda, depth - 1, out);
  cantor_intervals(b - len, b, lambda, depth - 1, out);
}

GridDomain build_cantor_complement(const DomainSpec& spec, const std::string& label) {
  const double lambda = param(spec, "lambda", 1.0 / 3.0);
  const double depth_d = param(spec, "depth", 4.0);
  if (!(lambda > 0.0 && lambda < 0.5)) throw SpecError("cantor_complement: ratio lambda must lie in (0, 1/2)");
  if (depth_d < 0 || depth_d > 30 || depth_d != std::floor(depth_d)) throw SpecError("cantor_complement: bad depth");
  std::vector<std::pair<double, double>> iv;
  cantor_intervals(0.0, 1.0, lambda, static_cast<int>(depth_d), iv);
  const int res = spec.resolution;
  const std::array<int, 3> below{static_cast<int>(std::lround(0.5 * res)), static_cast<int>(std::lround(1.0 * res)), 0};
  const std::array<int, 3> above{static_cast<int>(std::lround(1.5 * res)), static_cast<int>(std::lround(1.0 * res)), 0};
  GridShape s = center_aligned(2, res, below, above);
  const double h = s.h();
  return sample(s, label, [&](Index i) {
    auto l = lattice(s, i, below);
    if (l[1] != 0) return true;
    const double lo = (l[0] - 0.5) * h, hi = (l[0] + 0.5) * h;
    for (const auto& [a, b] : iv)
      if (lo <= b && hi >= a) return false;
    return true;
  });
}

GridDomain build_annulus(const DomainSpec& spec, const std::string& label) {
  const double r_in = param(spec, "r_in", 0.5);
  const double r_out = param(spec, "r_out", 1.0);
  if (!(r_in > 0.0 && r_in < r_out)) throw SpecError("annulus: need 0 < r_in < r_out");
  const double box = param(spec, "box", 1.25 * r_out);
  if (!(box > r_out)) throw SpecError("annulus: box half-width must exceed r_out");
  const auto k = symmetric_half(spec.dim, spec.resolution, box);
  GridShape s = center_aligned(spec.dim, spec.resolution, k, k);
  const double h = s.h();
  return sample(s, label, [&](Index i) {
    auto l = lattice(s, i, k);
    const double r = std::sqrt(static_cast<double>(l[0] * l[0] + l[1] * l[1] + l[2] * l[2])) * h;
    return r > r_in && r < r_out;
  });
}

GridDomain build_interval(const DomainSpec& spec, const std::string& label) {
  const int res = spec.resolution;
  const int margin = std::max(1, static_cast<int>(std::lround(0.25 * res)));
  GridShape s = center_aligned(1, res, {margin, 0, 0}, {res + margin, 0, 0});
  return sample(s, label, [&](Index i) {
    const long x = static_cast<long>(s.coords(i)[0]) - margin;
    return x > 0 && x < res;
  });
}

const std::map<std::string, Family>& families() {
  static const std::map<std::string, Family> table = {
      {"half_space", {2, 1, 3, {"extent", "cut"}, build_half_space}},
      {"quarter_space", {2, 2, 3, {"extent", "corner"}, build_quarter_space}},
      {"punctured_ball", {2, 2, 3, {"box"}, build_punctured_ball}},
      {"slit_disk", {2, 2, 2, {"box"}, build_slit_disk}},
      {"exterior_cusp", {2, 2, 2, {"kappa", "box"}, build_exterior_cusp}},
      {"cantor_complement", {2, 2, 2, {"lambda", "depth"}, build_cantor_complement}},
      {"annulus", {2, 2, 3, {"r_in", "r_out", "box"}, build_annulus}},
      {"interval_1d", {1, 1, 1, {}, build_interval}},
  };
  return table;
}

}  // namespace

std::vector<std::string> domain_families() {
  std::vector<std::string> out;
  for (const auto& [name, f] : families()) out.push_back(name);
  return out;
}

GridDomain build_domain(const DomainSpec& in) {
  auto it = families().find(in.family);
  if (it == families().end()) throw SpecError("unknown domain family '" + in.family + "'");
  const Family& fam = it->second;
  DomainSpec spec = in;
  if (spec.dim == 0) spec.dim = fam.default_dim;
  if (spec.dim < fam.min_dim || spec.dim > fam.max_dim)
    throw SpecError(in.family + ": dimension " + std::to_string(spec.dim) + " not supported");
  if (spec.resolution < 1) throw SpecError("resolution must be a positive cell count per unit length");
  for (const auto& [k, v] : spec.params)
    if (!fam.params.count(k)) throw SpecError(in.family + ": unknown parameter '" + k + "'");
  return fam.build(spec, domain_label(spec));
}

}  // namespace hardylab
