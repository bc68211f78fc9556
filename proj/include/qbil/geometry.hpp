#pragma once

// Apparatus geometry: a right isosceles billiard (legs on the axes, right angle at the
// origin) whose hypotenuse is either straight or a dispersing circular arc, a slit screen
// along the base and an open radiation box underneath with a film line near its floor.
//
//   y
//   |\            billiard D0, walls D1 (base, y = 0), D2 (x = 0), D4 (hypotenuse)
//   | \ .
//   |__\___       slit screen: soft skin of width w_skin, then a hard core of width w_skin
//   |  | |  |     radiation box of depth d_box, absorbing floor and side walls
//   |_______|

#include <array>
#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qbil/error.hpp"
#include "qbil/grid.hpp"
#include "qbil/vec2.hpp"

namespace qbil {

enum class DomainIndex : std::uint8_t {
  D0,        // billiard interior, U = 0
  D1,        // horizontal (base) wall skin
  D2,        // vertical wall skin
  D4,        // hypotenuse wall skin
  Box,       // radiation region and open slit channels, U = 0
  Exterior,  // hard Dirichlet closure
};

inline std::string_view to_string(DomainIndex d) {
  switch (d) {
    case DomainIndex::D0: return "D0";
    case DomainIndex::D1: return "D1";
    case DomainIndex::D2: return "D2";
    case DomainIndex::D4: return "D4";
    case DomainIndex::Box: return "Box";
    case DomainIndex::Exterior: return "Exterior";
  }
  return "?";
}

/// Observables that stay conserved while a trajectory is inside each domain
/// (straight walls: the wall's translation symmetry; arc: the rotation about its centre).
inline std::string_view local_constants(DomainIndex d, bool arc_hypotenuse) {
  switch (d) {
    case DomainIndex::D0: return "H, Px (equivalently H, Py)";
    case DomainIndex::D1: return "H, Px";
    case DomainIndex::D2: return "H, Py";
    case DomainIndex::D4: return arc_hypotenuse ? "H, Ptheta" : "H, (Px - Py)/sqrt2";
    case DomainIndex::Box: return "H";
    case DomainIndex::Exterior: return "";
  }
  return "";
}

enum class HypotenuseKind { kStraight, kArc };

struct StraightHypotenuse {};

struct ArcHypotenuse {
  double radius = 0.0;
  Vec2 center;
  double sagitta = 0.0;
};

using Hypotenuse = std::variant<StraightHypotenuse, ArcHypotenuse>;

struct ApparatusConfig {
  double leg_length = 1.0;
  HypotenuseKind hypotenuse = HypotenuseKind::kStraight;
  double arc_sagitta = 0.0;  // inward bulge of the arc at its midpoint
  double wall_height = 25000.0;
  double wall_skin = 0.03;
  double slit_separation = 0.3;
  double slit_width = 0.05;
  double slit_center = std::numeric_limits<double>::quiet_NaN();  // NaN: middle of the base
  double box_depth = 1.5;
  double box_margin = 0.05;  // box extends this far beyond the triangle on each side
  double film_offset = 0.3;  // film height above the box floor
  double absorber_width = 0.2;
  double absorber_strength = 20000.0;
  bool seal_slit1 = false;
  bool seal_slit2 = false;
};

class ApparatusGeometry {
 public:
  const ApparatusConfig& config() const { return cfg_; }
  const Hypotenuse& hypotenuse() const { return hyp_; }
  bool is_arc() const { return std::holds_alternative<ArcHypotenuse>(hyp_); }
  double leg() const { return cfg_.leg_length; }
  double skin() const { return cfg_.wall_skin; }
  double screen_thickness() const { return 2.0 * cfg_.wall_skin; }
  double box_top() const { return -screen_thickness(); }
  double box_bottom() const { return box_top() - cfg_.box_depth; }
  double film_y() const { return box_bottom() + cfg_.film_offset; }
  double slit_midpoint() const { return slit_mid_; }

  /// Centre abscissa of slit k (k = 0 left, k = 1 right).
  double slit_x(int k) const { return slit_mid_ + (k == 0 ? -0.5 : 0.5) * cfg_.slit_separation; }
  bool slit_open(int k) const { return k == 0 ? !cfg_.seal_slit1 : !cfg_.seal_slit2; }

  /// Bounding rectangle covered by the simulation grid: {x_lo, y_lo, x_hi, y_hi}.
  std::array<double, 4> bounds() const {
    const double l = cfg_.leg_length;
    return {-cfg_.box_margin, box_bottom(), l + cfg_.box_margin, l + 1.5 * cfg_.wall_skin};
  }

  /// Strictly inside the billiard (boundary points belong to the walls).
  bool inside_billiard(Vec2 p) const {
    const double l = cfg_.leg_length;
    if (!(p.x > 0.0 && p.y > 0.0 && p.x + p.y < l)) return false;
    if (const auto* arc = std::get_if<ArcHypotenuse>(&hyp_)) return norm(p - arc->center) > arc->radius;
    return true;
  }

  double distance_to_base(Vec2 p) const { return segment_distance(p, {0.0, 0.0}, {cfg_.leg_length, 0.0}); }
  double distance_to_vertical(Vec2 p) const { return segment_distance(p, {0.0, 0.0}, {0.0, cfg_.leg_length}); }

  double distance_to_hypotenuse(Vec2 p) const {
    const double l = cfg_.leg_length;
    const Vec2 a{l, 0.0};
    const Vec2 b{0.0, l};
    const auto* arc = std::get_if<ArcHypotenuse>(&hyp_);
    if (arc == nullptr) return segment_distance(p, a, b);
    const Vec2 r = p - arc->center;
    // The arc is the part of the circle on the billiard side of the chord, i.e. between the
    // directions to the two endpoints.
    const Vec2 ra = a - arc->center;
    const Vec2 rb = b - arc->center;
    const double turn = cross(ra, rb);
    const bool within = cross(ra, r) * turn >= 0.0 && cross(r, rb) * turn >= 0.0;
    if (within) return std::abs(norm(r) - arc->radius);
    return std::min(norm(p - a), norm(p - b));
  }

  bool in_slit_channel(Vec2 p) const {
    if (!(p.y < 0.0 && p.y >= box_top())) return false;
    for (int k = 0; k < 2; ++k) {
      if (slit_open(k) && std::abs(p.x - slit_x(k)) < 0.5 * cfg_.slit_width) return true;
    }
    return false;
  }

  /// Label plus wall distance used for the potential ramp (distance is 0 off the walls).
  std::pair<DomainIndex, double> classify(Vec2 p) const {
    if (p.y < box_top()) return {DomainIndex::Box, 0.0};
    if (in_slit_channel(p)) return {DomainIndex::Box, 0.0};
    if (inside_billiard(p)) return {DomainIndex::D0, 0.0};
    const double d1 = distance_to_base(p);
    const double d2 = distance_to_vertical(p);
    const double d4 = distance_to_hypotenuse(p);
    DomainIndex wall = DomainIndex::D1;
    double d = d1;
    if (d2 < d) {
      wall = DomainIndex::D2;
      d = d2;
    }
    if (d4 < d) {
      wall = DomainIndex::D4;
      d = d4;
    }
    if (d <= cfg_.wall_skin) return {wall, d};
    return {DomainIndex::Exterior, 0.0};
  }

 private:
  friend ApparatusGeometry build_apparatus(const ApparatusConfig& config);

  ApparatusConfig cfg_;
  Hypotenuse hyp_;
  double slit_mid_ = 0.0;
};

/// C^1 monotone ramp on [0, 1]: 0 at the wall face, 1 at the back of the skin.
inline double wall_ramp(double u) {
  u = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
  return u * u * (3.0 - 2.0 * u);
}

inline ApparatusGeometry build_apparatus(const ApparatusConfig& config) {
  const ApparatusConfig& c = config;
  const double l = c.leg_length;
  require(l > 0.0, "leg_length must be positive");
  require(c.wall_height > 0.0, "wall_height must be positive");
  require(c.wall_skin > 0.0, "wall_skin must be positive");
  require(c.slit_width > 0.0, "slit_width must be positive");
  require(c.slit_separation > 0.0, "slit_separation must be positive");
  require(c.box_depth > 0.0, "box_depth must be positive");
  require(c.absorber_width > 0.0, "absorber_width must be positive");
  require(c.absorber_strength >= 0.0, "absorber_strength must be nonnegative");
  require(c.film_offset > 0.0, "film_offset must be positive");
  require(c.slit_separation > c.slit_width, "slits overlap: slit_separation must exceed slit_width");
  require(c.absorber_width < c.box_depth, "absorber_width must be smaller than box_depth");
  require(c.film_offset > c.absorber_width, "film must sit above the floor absorber (film_offset > absorber_width)");
  require(c.film_offset < c.box_depth, "film_offset must lie inside the box");
  require(c.box_margin > c.wall_skin, "box_margin must exceed wall_skin");

  ApparatusGeometry g;
  g.cfg_ = c;
  g.slit_mid_ = std::isnan(c.slit_center) ? 0.5 * l : c.slit_center;
  const double left = g.slit_x(0) - 0.5 * c.slit_width;
  const double right = g.slit_x(1) + 0.5 * c.slit_width;
  require(left > 0.0 && right < l, "slits must lie strictly inside the triangle base");

  if (c.hypotenuse == HypotenuseKind::kStraight) {
    g.hyp_ = StraightHypotenuse{};
  } else {
    const double h = c.arc_sagitta;
    require(h != 0.0, "degenerate arc; use Straight");
    require(h > 0.0, "arc_sagitta must be positive (dispersing arc)");
    const double height = l / std::numbers::sqrt2;  // right-angle vertex to hypotenuse
    require(h < height, "arc sagitta must be smaller than the triangle height");
    const double half_chord = l / std::numbers::sqrt2;
    const double radius = (h * h + half_chord * half_chord) / (2.0 * h);
    const Vec2 mid{0.5 * l, 0.5 * l};
    const Vec2 outward{1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2};
    g.hyp_ = ArcHypotenuse{radius, mid + outward * (radius - h), h};
  }
  return g;
}

/// Rasterised apparatus: real wall potential, absorbing (negative imaginary) part and labels.
struct PotentialField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<double> potential;  // U >= 0
  std::vector<double> absorber;   // W >= 0, the propagated Hamiltonian carries U - iW
  std::vector<DomainIndex> label;

  std::size_t size() const { return nx * ny; }
  bool active(std::size_t k) const { return label[k] != DomainIndex::Exterior; }

  std::size_t count(DomainIndex d) const {
    std::size_t n = 0;
    for (auto l : label) n += (l == d) ? 1 : 0;
    return n;
  }

  /// Everything open and force-free: used for free-particle checks.
  static PotentialField open(const GridSpec& grid) {
    PotentialField f;
    f.nx = grid.nx;
    f.ny = grid.ny;
    f.x0 = grid.x0;
    f.y0 = grid.y0;
    f.dx = grid.dx;
    f.dy = grid.dy;
    f.potential.assign(grid.size(), 0.0);
    f.absorber.assign(grid.size(), 0.0);
    f.label.assign(grid.size(), DomainIndex::D0);
    return f;
  }
};

/// Grid covering the apparatus bounds with nx by ny cells.
inline GridSpec make_grid(const ApparatusGeometry& geom, std::size_t nx, std::size_t ny) {
  require(nx >= 3 && ny >= 3, "grid needs at least 3 cells per direction");
  const auto b = geom.bounds();
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.x0 = b[0];
  g.y0 = b[1];
  g.dx = (b[2] - b[0]) / static_cast<double>(nx);
  g.dy = (b[3] - b[1]) / static_cast<double>(ny);
  g.dt = default_time_step(g.dx, g.dy, g.hbar, g.mass);
  return g;
}

/// Grid with square cells: nx cells across, as many rows as needed to cover the bounds.
/// The top edge may overshoot the bounds slightly; those cells are Exterior.
inline GridSpec make_square_grid(const ApparatusGeometry& geom, std::size_t nx) {
  require(nx >= 3, "grid needs at least 3 cells per direction");
  const auto b = geom.bounds();
  const double h = (b[2] - b[0]) / static_cast<double>(nx);
  const auto ny = static_cast<std::size_t>(std::ceil((b[3] - b[1]) / h - 1e-9));
  GridSpec g = make_grid(geom, nx, std::max<std::size_t>(ny, 3));
  g.dy = h;
  g.dt = default_time_step(g.dx, g.dy, g.hbar, g.mass);
  return g;
}

inline DomainIndex domain_of(const ApparatusGeometry& geom, Vec2 p) { return geom.classify(p).first; }

/// Absorbing strength at a box point: eta ((w_abs - q)/w_abs)^4 within w_abs of floor or sides.
inline double absorber_at(const ApparatusGeometry& geom, Vec2 p, double x_lo, double x_hi) {
  const auto& c = geom.config();
  const double q = std::min({p.y - geom.box_bottom(), p.x - x_lo, x_hi - p.x});
  if (q >= c.absorber_width) return 0.0;
  const double u = (c.absorber_width - std::max(q, 0.0)) / c.absorber_width;
  return c.absorber_strength * u * u * u * u;
}

inline PotentialField rasterize_potential(const ApparatusGeometry& geom, const GridSpec& grid) {
  const auto& c = geom.config();
  if (c.slit_width < 4.0 * grid.dx)
    fail(ErrorKind::kInvalidInput, "grid under-resolves the slits: need slit_width >= 4 dx");
  if (c.wall_skin < 4.0 * std::max(grid.dx, grid.dy))
    fail(ErrorKind::kInvalidInput, "grid under-resolves the wall skin: need wall_skin >= 4 max(dx, dy)");

  PotentialField f = PotentialField::open(grid);
  const double x_lo = grid.x0;
  const double x_hi = grid.x0 + grid.dx * static_cast<double>(grid.nx);
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const Vec2 p = grid.center(i, j);
      const auto [label, dist] = geom.classify(p);
      const std::size_t k = grid.index(i, j);
      f.label[k] = label;
      switch (label) {
        case DomainIndex::D1:
        case DomainIndex::D2:
        case DomainIndex::D4:
          f.potential[k] = c.wall_height * wall_ramp(dist / c.wall_skin);
          break;
        case DomainIndex::Box:
          if (p.y < geom.box_top()) f.absorber[k] = absorber_at(geom, p, x_lo, x_hi);
          break;
        default:
          break;
      }
    }
  }
  return f;
}

}  // namespace qbil
