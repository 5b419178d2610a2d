#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardylab {

using Index = std::size_t;
using Coord = std::array<int, 3>;
using Point = std::array<double, 3>;
using CellMask = std::vector<std::uint8_t>;

// Thrown for malformed specs, configs and text files.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Uniform cell grid over an axis-aligned box. Unused axes have count 1.
class GridShape {
 public:
  GridShape() = default;
  GridShape(int dim, double h, Coord counts, Point origin);

  int dim() const { return dim_; }
  double h() const { return h_; }
  const Coord& counts() const { return counts_; }
  const Point& origin() const { return origin_; }
  Index size() const { return size_; }
  double cell_measure() const;
  double side(int axis) const { return counts_[axis] * h_; }
  double min_side() const;

  Index index(const Coord& c) const {
    return static_cast<Index>(c[0]) +
           static_cast<Index>(counts_[0]) *
               (static_cast<Index>(c[1]) + static_cast<Index>(counts_[1]) * static_cast<Index>(c[2]));
  }
  Coord coords(Index i) const {
    Coord c{0, 0, 0};
    c[0] = static_cast<int>(i % counts_[0]);
    i /= counts_[0];
    c[1] = static_cast<int>(i % counts_[1]);
    c[2] = static_cast<int>(i / counts_[1]);
    return c;
  }
  bool contains(const Coord& c) const {
    for (int a = 0; a < 3; ++a)
      if (c[a] < 0 || c[a] >= counts_[a]) return false;
    return true;
  }
  Point center(const Coord& c) const;
  Point center(Index i) const { return center(coords(i)); }
  std::array<Index, 3> strides() const {
    return {1, static_cast<Index>(counts_[0]), static_cast<Index>(counts_[0]) * counts_[1]};
  }

  bool operator==(const GridShape&) const = default;

 private:
  int dim_ = 0;
  double h_ = 0.0;
  Coord counts_{1, 1, 1};
  Point origin_{0.0, 0.0, 0.0};
  Index size_ = 0;
};

std::size_t count_cells(const CellMask& mask);
std::vector<Index> mask_members(const CellMask& mask);
double squared_distance(const Point& a, const Point& b, int dim);

struct Ball {
  Point center{0.0, 0.0, 0.0};
  double radius = 0.0;
  bool closed = false;
};

// Membership rule shared by every discretized ball: squared offset in cell
// units against (radius/h)^2, with ties at exact ladder ticks resolved as
// on the real line.
bool within_radius(double sq_cells, double radius_cells, bool closed);

// Offsets (z, y, x lexicographic, i.e. row-major index order) of a
// cell-centred discretized ball.
struct Stencil {
  int dim = 0;
  long max_sq = -1;
  int reach = 0;  // max |offset| along any axis
  std::vector<Coord> offsets;
  struct Run {
    int dy, dz, x0, x1;  // offsets x0..x1 inclusive on row (dy, dz)
  };
  std::vector<Run> runs;
};

// Small stencils are shared for the life of the process. Large ones sit in a
// per-thread ring of four, so do not hold the reference across further calls.
const Stencil& ball_stencil(int dim, double radius_cells, bool closed);

// Cells of the discretized ball, clipped to the box, in index order.
std::vector<Index> ball_cells(const GridShape& shape, const Ball& ball);
std::vector<Index> ball_cells_at(const GridShape& shape, Index center, double radius, bool closed);
std::size_t ball_cell_count_at(const GridShape& shape, Index center, double radius, bool closed);

// True when every cell of the discretized ball keeps all 2n neighbours in
// the box, so the ball is surrounded by cells the problem can pin.
bool ball_interior_to_box(const GridShape& shape, Index center, double radius, bool closed);

struct ScalarField {
  GridShape shape;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridShape& s, double fill = 0.0) : shape(s), values(s.size(), fill) {}
  double operator[](Index i) const { return values[i]; }
  double& operator[](Index i) { return values[i]; }
};

struct GradientField {
  GridShape shape;
  std::vector<double> values;
};

// |forward differences| / h per cell; backward difference on the last
// layer of each axis.
GradientField discrete_gradient(const ScalarField& u);

// Σ_cells g_u^p h^n over the whole box.
double p_energy(const ScalarField& u, double p);

class GridDomain {
 public:
  GridDomain() = default;
  GridDomain(GridShape shape, CellMask inside, std::string name, bool require_connected);

  const GridShape& shape() const { return shape_; }
  const CellMask& inside() const { return inside_; }
  bool is_inside(Index i) const { return inside_[i] != 0; }
  const std::string& name() const { return name_; }
  std::size_t inside_count() const { return inside_count_; }

  CellMask complement() const;
  // Complement cells with an inside 2n-neighbour.
  CellMask boundary() const;

 private:
  GridShape shape_;
  CellMask inside_;
  std::string name_;
  std::size_t inside_count_ = 0;
};

bool is_connected(const GridShape& shape, const CellMask& mask);

struct DistanceFields {
  ScalarField to_complement;
  ScalarField to_boundary;
};

// Exact squared Euclidean distance transform (cell units) to the target cells.
std::vector<double> squared_distance_transform(const GridShape& shape, const CellMask& targets);

DistanceFields distance_fields(const GridDomain& domain);

// max δ_Ω/d_Ω over inside cells.
double distance_comparability(const GridDomain& domain, const DistanceFields& dist);

struct DyadicLayer {
  int k = 0;  // cells with 2^-k ≤ d < 2^(1-k)
  std::vector<Index> cells;
};

int dyadic_layer_index(double d);
std::vector<DyadicLayer> dyadic_layers(const GridDomain& domain, const ScalarField& to_complement);
std::vector<DyadicLayer> dyadic_layers(const GridDomain& domain);

struct DoublingSample {
  Index x = 0;
  double R = 0.0;
  Index y = 0;
  double r = 0.0;
  double ratio = 0.0;
};

struct DoublingReport {
  double min_ratio = 0.0;
  std::size_t samples = 0;
  DoublingSample worst;
};

DoublingReport doubling_profile(const GridDomain& domain, std::size_t sample_count,
                                std::uint64_t seed = 1);
double doubling_ratio(const GridShape& shape, const DoublingSample& s);

struct DomainSpec {
  std::string family;
  int dim = 0;          // 0 picks the family default
  int resolution = 64;  // cells per unit length, h = 1/resolution
  std::map<std::string, double> params;
};

DomainSpec parse_domain_spec(const std::string& text);
DomainSpec load_domain_spec(const std::filesystem::path& path);
std::string domain_label(const DomainSpec& spec);
std::vector<std::string> domain_families();
GridDomain build_domain(const DomainSpec& spec);

std::string write_domain_text(const GridDomain& domain);
GridDomain read_domain_text(const std::string& text);
std::string write_field_text(const ScalarField& field);
ScalarField read_field_text(const std::string& text);

}  // namespace hardylab
