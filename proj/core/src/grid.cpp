#include "hardylab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>

#include "util.hpp"

namespace hardylab {

GridShape::GridShape(int dim, double h, Coord counts, Point origin)
    : dim_(dim), h_(h), counts_(counts), origin_(origin) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("grid spacing must be positive");
  for (int a = 0; a < 3; ++a) {
    if (a >= dim) {
      counts_[a] = 1;
      origin_[a] = 0.0;
    }
    if (counts_[a] < 1) throw std::invalid_argument("grid counts must be positive");
  }
  size_ = static_cast<Index>(counts_[0]) * counts_[1] * counts_[2];
}

double GridShape::cell_measure() const { return std::pow(h_, dim_); }

double GridShape::min_side() const {
  double s = side(0);
  for (int a = 1; a < dim_; ++a) s = std::min(s, side(a));
  return s;
}

Point GridShape::center(const Coord& c) const {
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + (c[a] + 0.5) * h_;
  return p;
}

std::size_t count_cells(const CellMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
}

std::vector<Index> mask_members(const CellMask& mask) {
  std::vector<Index> out;
  for (Index i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

double squared_distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

bool within_radius(double sq_cells, double radius_cells, bool closed) {
  const double r2 = radius_cells * radius_cells;
  const double slack = 1e-9 * std::max(1.0, r2);
  return closed ? sq_cells <= r2 + slack : sq_cells < r2 - slack;
}

namespace {

long stencil_max_sq(double radius_cells, bool closed) {
  const double r2 = radius_cells * radius_cells;
  auto s = static_cast<long>(std::floor(r2 + 1e-9 * std::max(1.0, r2))) + 1;
  while (s >= 0 && !within_radius(static_cast<double>(s), radius_cells, closed)) --s;
  return s;
}

int reach_of(long max_sq) {
  if (max_sq < 0) return 0;
  int reach = static_cast<int>(std::floor(std::sqrt(static_cast<double>(max_sq))));
  while (static_cast<long>(reach + 1) * (reach + 1) <= max_sq) ++reach;
  while (reach > 0 && static_cast<long>(reach) * reach > max_sq) --reach;
  return reach;
}

std::unique_ptr<Stencil> make_stencil(int dim, long max_sq) {
  auto st = std::make_unique<Stencil>();
  st->dim = dim;
  st->max_sq = max_sq;
  const int reach = max_sq < 0 ? -1 : reach_of(max_sq);
  st->reach = std::max(reach, 0);
  const int rz = dim >= 3 ? reach : 0;
  const int ry = dim >= 2 ? reach : 0;
  for (int z = -rz; z <= rz; ++z)
    for (int y = -ry; y <= ry; ++y)
      for (int x = -reach; x <= reach; ++x) {
        long sq = static_cast<long>(x) * x + static_cast<long>(y) * y + static_cast<long>(z) * z;
        if (sq <= max_sq) st->offsets.push_back({x, y, z});
      }
  for (const Coord& o : st->offsets) {
    if (!st->runs.empty() && st->runs.back().dy == o[1] && st->runs.back().dz == o[2] &&
        st->runs.back().x1 + 1 == o[0])
      st->runs.back().x1 = o[0];
    else
      st->runs.push_back({o[1], o[2], o[0], o[0]});
  }
  return st;
}

constexpr std::size_t kSharedStencilBudget = std::size_t{1} << 23;  // offsets kept process-wide
constexpr std::size_t kLocalStencilSlots = 4;

struct StencilCache {
  std::mutex mutex;
  std::map<std::pair<int, long>, std::unique_ptr<Stencil>> entries;
  std::size_t total = 0;
};

StencilCache& stencil_cache() {
  static StencilCache cache;
  return cache;
}

}  // namespace

const Stencil& ball_stencil(int dim, double radius_cells, bool closed) {
  const long max_sq = stencil_max_sq(radius_cells, closed);
  auto& cache = stencil_cache();
  {
    std::lock_guard lock(cache.mutex);
    auto it = cache.entries.find({dim, max_sq});
    if (it != cache.entries.end()) return *it->second;
  }
  // Overflow stencils live in a small per-thread ring.
  thread_local std::vector<std::unique_ptr<Stencil>> ring;
  for (auto& st : ring)
    if (st->dim == dim && st->max_sq == max_sq) return *st;
  auto st = make_stencil(dim, max_sq);
  {
    std::lock_guard lock(cache.mutex);
    if (cache.total + st->offsets.size() <= kSharedStencilBudget) {
      cache.total += st->offsets.size();
      auto& slot = cache.entries[{dim, max_sq}];
      if (!slot) slot = std::move(st);
      return *slot;
    }
  }
  if (ring.size() == kLocalStencilSlots) ring.erase(ring.begin());
  ring.push_back(std::move(st));
  return *ring.back();
}

std::vector<Index> ball_cells(const GridShape& shape, const Ball& ball) {
  const double h = shape.h();
  const double rc = ball.radius / h;
  Coord lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < shape.dim(); ++a) {
    double c = (ball.center[a] - shape.origin()[a]) / h - 0.5;
    lo[a] = std::max(0, static_cast<int>(std::floor(c - rc)) - 1);
    hi[a] = std::min(shape.counts()[a] - 1, static_cast<int>(std::ceil(c + rc)) + 1);
  }
  std::vector<Index> out;
  for (int z = lo[2]; z <= hi[2]; ++z)
    for (int y = lo[1]; y <= hi[1]; ++y)
      for (int x = lo[0]; x <= hi[0]; ++x) {
        Coord c{x, y, z};
        Point p = shape.center(c);
        double sq = 0.0;
        for (int a = 0; a < shape.dim(); ++a) {
          double t = (p[a] - ball.center[a]) / h;
          sq += t * t;
        }
        if (within_radius(sq, rc, ball.closed)) out.push_back(shape.index(c));
      }
  return out;
}

std::vector<Index> ball_cells_at(const GridShape& shape, Index center, double radius, bool closed) {
  const Stencil& st = ball_stencil(shape.dim(), radius / shape.h(), closed);
  const Coord c = shape.coords(center);
  std::vector<Index> out;
  out.reserve(st.offsets.size());
  for (const Coord& o : st.offsets) {
    Coord q{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
    if (shape.contains(q)) out.push_back(shape.index(q));
  }
  return out;
}

std::size_t ball_cell_count_at(const GridShape& shape, Index center, double radius, bool closed) {
  const Stencil& st = ball_stencil(shape.dim(), radius / shape.h(), closed);
  const Coord c = shape.coords(center);
  bool inside = true;
  for (int a = 0; a < shape.dim(); ++a)
    if (c[a] - st.reach < 0 || c[a] + st.reach >= shape.counts()[a]) inside = false;
  if (inside) return st.offsets.size();
  std::size_t n = 0;
  for (const Coord& o : st.offsets)
    if (shape.contains({c[0] + o[0], c[1] + o[1], c[2] + o[2]})) ++n;
  return n;
}

bool ball_interior_to_box(const GridShape& shape, Index center, double radius, bool closed) {
  const int reach = reach_of(stencil_max_sq(radius / shape.h(), closed));
  const Coord c = shape.coords(center);
  for (int a = 0; a < shape.dim(); ++a)
    if (c[a] - reach < 1 || c[a] + reach > shape.counts()[a] - 2) return false;
  return true;
}

GradientField discrete_gradient(const ScalarField& u) {
  const GridShape& s = u.shape;
  GradientField g{s, std::vector<double>(s.size(), 0.0)};
  const auto st = s.strides();
  const double inv_h = 1.0 / s.h();
  for (Index i = 0; i < s.size(); ++i) {
    const Coord c = s.coords(i);
    double sum = 0.0;
    for (int a = 0; a < s.dim(); ++a) {
      const int n = s.counts()[a];
      double d = 0.0;
      if (c[a] + 1 < n)
        d = u.values[i + st[a]] - u.values[i];
      else if (n >= 2)
        d = u.values[i] - u.values[i - st[a]];
      sum += d * d;
    }
    g.values[i] = std::sqrt(sum) * inv_h;
  }
  return g;
}

double p_energy(const ScalarField& u, double p) {
  const GradientField g = discrete_gradient(u);
  double sum = 0.0;
  if (p == 2.0) {
    for (double v : g.values) sum += v * v;
  } else {
    for (double v : g.values)
      if (v > 0.0) sum += std::pow(v, p);
  }
  return sum * u.shape.cell_measure();
}

bool is_connected(const GridShape& shape, const CellMask& mask) {
  Index start = mask.size();
  for (Index i = 0; i < mask.size(); ++i)
    if (mask[i]) {
      start = i;
      break;
    }
  if (start == mask.size()) return false;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<Index> stack{start};
  seen[start] = 1;
  std::size_t reached = 0;
  const auto st = shape.strides();
  while (!stack.empty()) {
    Index i = stack.back();
    stack.pop_back();
    ++reached;
    const Coord c = shape.coords(i);
    for (int a = 0; a < shape.dim(); ++a) {
      if (c[a] > 0 && mask[i - st[a]] && !seen[i - st[a]]) {
        seen[i - st[a]] = 1;
        stack.push_back(i - st[a]);
      }
      if (c[a] + 1 < shape.counts()[a] && mask[i + st[a]] && !seen[i + st[a]]) {
        seen[i + st[a]] = 1;
        stack.push_back(i + st[a]);
      }
    }
  }
  return reached == count_cells(mask);
}

GridDomain::GridDomain(GridShape shape, CellMask inside, std::string name, bool require_connected)
    : shape_(std::move(shape)), inside_(std::move(inside)), name_(std::move(name)) {
  if (inside_.size() != shape_.size()) throw std::invalid_argument("inside mask size does not match the grid");
  inside_count_ = count_cells(inside_);
  if (inside_count_ == 0) throw std::invalid_argument("domain '" + name_ + "' has no inside cells");
  if (inside_count_ == inside_.size())
    throw std::invalid_argument("domain '" + name_ + "' has an empty complement in the box");
  if (require_connected && !is_connected(shape_, inside_))
    throw std::invalid_argument("domain '" + name_ + "' is not connected");
}

CellMask GridDomain::complement() const {
  CellMask out(inside_.size());
  for (Index i = 0; i < inside_.size(); ++i) out[i] = inside_[i] ? 0 : 1;
  return out;
}

CellMask GridDomain::boundary() const {
  CellMask out(inside_.size(), 0);
  const auto st = shape_.strides();
  for (Index i = 0; i < inside_.size(); ++i) {
    if (inside_[i]) continue;
    const Coord c = shape_.coords(i);
    for (int a = 0; a < shape_.dim() && !out[i]; ++a) {
      if (c[a] > 0 && inside_[i - st[a]]) out[i] = 1;
      if (c[a] + 1 < shape_.counts()[a] && inside_[i + st[a]]) out[i] = 1;
    }
  }
  return out;
}

namespace {

constexpr double kFar = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb and Huttenlocher), exact on
// integer sites; sites with infinite value are skipped.
void edt_line(const double* f, double* out, int n, std::vector<int>& v, std::vector<double>& z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kFar) continue;
    const double fq = f[q] + static_cast<double>(q) * q;
    double s = 0.0;
    while (k >= 0) {
      const int p = v[k];
      s = (fq - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s <= z[k])
        --k;
      else
        break;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kFar : s;
    z[k + 1] = kFar;
  }
  if (k < 0) {
    std::fill(out, out + n, kFar);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double d = q - v[k];
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const GridShape& shape, const CellMask& targets) {
  std::vector<double> f(shape.size());
  for (Index i = 0; i < f.size(); ++i) f[i] = targets[i] ? 0.0 : kFar;
  const auto st = shape.strides();
  int longest = std::max({shape.counts()[0], shape.counts()[1], shape.counts()[2]});
  std::vector<double> line(longest), res(longest), z(longest + 1);
  std::vector<int> v(longest);
  for (int a = 0; a < shape.dim(); ++a) {
    const int n = shape.counts()[a];
    for (Index base = 0; base < shape.size(); ++base) {
      if (shape.coords(base)[a] != 0) continue;
      for (int q = 0; q < n; ++q) line[q] = f[base + q * st[a]];
      edt_line(line.data(), res.data(), n, v, z);
      for (int q = 0; q < n; ++q) f[base + q * st[a]] = res[q];
    }
  }
  return f;
}

DistanceFields distance_fields(const GridDomain& domain) {
  const GridShape& s = domain.shape();
  const auto sq_c = squared_distance_transform(s, domain.complement());
  const auto sq_b = squared_distance_transform(s, domain.boundary());
  DistanceFields out{ScalarField(s), ScalarField(s)};
  for (Index i = 0; i < s.size(); ++i) {
    if (!domain.is_inside(i)) continue;
    out.to_complement.values[i] = std::sqrt(sq_c[i]) * s.h();
    out.to_boundary.values[i] = std::sqrt(sq_b[i]) * s.h();
  }
  return out;
}

double distance_comparability(const GridDomain& domain, const DistanceFields& dist) {
  double worst = 0.0;
  for (Index i = 0; i < domain.shape().size(); ++i)
    if (domain.is_inside(i))
      worst = std::max(worst, dist.to_boundary.values[i] / dist.to_complement.values[i]);
  return worst;
}

int dyadic_layer_index(double d) {
  int e = 0;
  std::frexp(d, &e);  // d = m 2^e, m in [1/2, 1)
  return 1 - e;
}

std::vector<DyadicLayer> dyadic_layers(const GridDomain& domain, const ScalarField& to_complement) {
  std::map<int, std::vector<Index>> bands;
  for (Index i = 0; i < domain.shape().size(); ++i)
    if (domain.is_inside(i)) bands[dyadic_layer_index(to_complement.values[i])].push_back(i);
  std::vector<DyadicLayer> out;
  out.reserve(bands.size());
  for (auto& [k, cells] : bands) out.push_back({k, std::move(cells)});
  return out;
}

std::vector<DyadicLayer> dyadic_layers(const GridDomain& domain) {
  return dyadic_layers(domain, distance_fields(domain).to_complement);
}

namespace {

bool ball_inside_box(const GridShape& shape, Index center, double radius) {
  const int reach = reach_of(stencil_max_sq(radius / shape.h(), false));
  const Coord c = shape.coords(center);
  for (int a = 0; a < shape.dim(); ++a)
    if (c[a] - reach < 0 || c[a] + reach >= shape.counts()[a]) return false;
  return true;
}

}  // namespace

double doubling_ratio(const GridShape& shape, const DoublingSample& s) {
  const double big = static_cast<double>(ball_cell_count_at(shape, s.x, s.R, false));
  const double small = static_cast<double>(ball_cell_count_at(shape, s.y, s.r, false));
  return small / big * std::pow(s.R / s.r, shape.dim());
}

DoublingReport doubling_profile(const GridDomain& domain, std::size_t sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw std::invalid_argument("doubling_profile needs at least one sample");
  const GridShape& s = domain.shape();
  const double h = s.h();
  const double r_max = std::max(h, s.min_side() / 4.0);
  detail::Rng rng(seed);
  DoublingReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  std::size_t attempts = 0;
  while (rep.samples < sample_count && attempts < 200 * sample_count) {
    ++attempts;
    DoublingSample smp;
    smp.x = rng.below(s.size());
    smp.R = rng.uniform(h, r_max);
    if (!ball_inside_box(s, smp.x, smp.R)) continue;
    const auto cells = ball_cells_at(s, smp.x, smp.R, false);
    smp.y = cells[rng.below(cells.size())];
    smp.r = rng.uniform(h, smp.R);
    if (!ball_inside_box(s, smp.y, smp.r)) continue;
    smp.ratio = doubling_ratio(s, smp);
    if (smp.ratio < rep.min_ratio) {
      rep.min_ratio = smp.ratio;
      rep.worst = smp;
    }
    ++rep.samples;
  }
  if (rep.samples == 0) throw std::runtime_error("doubling_profile: no ball fits in the box");
  return rep;
}

namespace {

std::string header_line(const GridShape& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s.h());
  std::ostringstream os;
  os << s.dim() << ' ' << buf;
  for (int a = 0; a < s.dim(); ++a) os << ' ' << s.counts()[a];
  return os.str();
}

std::string meta_lines(const GridShape& s, const std::string& name) {
  std::ostringstream os;
  os << "# origin";
  char buf[64];
  for (int a = 0; a < s.dim(); ++a) {
    std::snprintf(buf, sizeof buf, " %.17g", s.origin()[a]);
    os << buf;
  }
  os << '\n';
  if (!name.empty()) os << "# name " << name << '\n';
  return os.str();
}

struct ParsedHeader {
  GridShape shape;
  std::string name;
  std::vector<std::string> rows;
};

ParsedHeader parse_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SpecError("grid text: missing header");
  std::istringstream hs(line);
  int dim = 0;
  double h = 0.0;
  if (!(hs >> dim >> h) || dim < 1 || dim > 3) throw SpecError("grid text: bad header '" + line + "'");
  Coord counts{1, 1, 1};
  for (int a = 0; a < dim; ++a)
    if (!(hs >> counts[a])) throw SpecError("grid text: header lacks counts");
  Point origin{0.0, 0.0, 0.0};
  ParsedHeader out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ms(line.substr(1));
      std::string key;
      ms >> key;
      if (key == "origin") {
        for (int a = 0; a < dim; ++a) ms >> origin[a];
      } else if (key == "name") {
        std::getline(ms >> std::ws, out.name);
      }
      continue;
    }
    out.rows.push_back(line);
  }
  out.shape = GridShape(dim, h, counts, origin);
  const Index expected = out.shape.size() / out.shape.counts()[0];
  if (out.rows.size() != expected)
    throw SpecError("grid text: expected " + std::to_string(expected) + " rows, found " +
                    std::to_string(out.rows.size()));
  return out;
}

}  // namespace

std::string write_domain_text(const GridDomain& domain) {
  const GridShape& s = domain.shape();
  std::ostringstream os;
  os << header_line(s) << '\n' << meta_lines(s, domain.name());
  const int nx = s.counts()[0];
  for (Index row = 0; row < s.size(); row += nx) {
    std::uint8_t state = 0;
    int run = 0;
    bool first = true;
    for (int x = 0; x < nx; ++x) {
      const std::uint8_t v = domain.inside()[row + x] ? 1 : 0;
      if (v == state) {
        ++run;
      } else {
        os << (first ? "" : " ") << run;
        first = false;
        state = v;
        run = 1;
      }
    }
    os << (first ? "" : " ") << run << '\n';
  }
  return os.str();
}

GridDomain read_domain_text(const std::string& text) {
  ParsedHeader ph = parse_text(text);
  const int nx = ph.shape.counts()[0];
  CellMask mask(ph.shape.size(), 0);
  for (std::size_t r = 0; r < ph.rows.size(); ++r) {
    std::istringstream rs(ph.rows[r]);
    long run = 0;
    std::uint8_t state = 0;
    long pos = 0;
    while (rs >> run) {
      if (run < 0 || pos + run > nx) throw SpecError("grid text: run lengths overflow row " + std::to_string(r));
      for (long k = 0; k < run; ++k) mask[r * nx + pos + k] = state;
      pos += run;
      state ^= 1;
    }
    if (pos != nx) throw SpecError("grid text: row " + std::to_string(r) + " does not sum to the row length");
  }
  return GridDomain(ph.shape, std::move(mask), ph.name, false);
}

std::string write_field_text(const ScalarField& field) {
  const GridShape& s = field.shape;
  std::ostringstream os;
  os << header_line(s) << '\n' << meta_lines(s, "");
  const int nx = s.counts()[0];
  char buf[40];
  for (Index row = 0; row < s.size(); row += nx) {
    for (int x = 0; x < nx; ++x) {
      std::snprintf(buf, sizeof buf, "%.17g", field.values[row + x]);
      os << (x ? " " : "") << buf;
    }
    os << '\n';
  }
  return os.str();
}

ScalarField read_field_text(const std::string& text) {
  ParsedHeader ph = parse_text(text);
  const int nx = ph.shape.counts()[0];
  ScalarField f(ph.shape);
  for (std::size_t r = 0; r < ph.rows.size(); ++r) {
    std::istringstream rs(ph.rows[r]);
    for (int x = 0; x < nx; ++x)
      if (!(rs >> f.values[r * nx + x])) throw SpecError("field text: short row " + std::to_string(r));
  }
  return f;
}

}  // namespace hardylab
