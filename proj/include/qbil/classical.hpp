#pragma once

// Point-particle billiard in the closed triangle (slits sealed, hard walls on the D0
// boundary). Flights are exact ray/wall intersections; flat walls reflect by exact sign
// flips and swaps so direction sets of the straight table carry no rounding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qbil/error.hpp"
#include "qbil/geometry.hpp"
#include "qbil/vec2.hpp"

namespace qbil::classical {

struct ClassicalState {
  Vec2 position;
  Vec2 direction{1.0, 0.0};  // unit
  double path_length = 0.0;
};

struct Bounce {
  Vec2 point;
  double theta_in = 0.0;   // direction angles in [0, 2 pi)
  double theta_out = 0.0;
  DomainIndex wall = DomainIndex::D1;
  double path_length = 0.0;  // at the bounce
};

struct Trajectory {
  std::vector<Bounce> bounces;
  double path_length = 0.0;
  ClassicalState final_state;
};

inline double angle_of(Vec2 d) {
  double a = std::atan2(d.y, d.x);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  if (a >= 2.0 * std::numbers::pi) a -= 2.0 * std::numbers::pi;
  return a + 0.0;  // no negative zero
}

inline Vec2 direction_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Inward unit normal of `wall` at boundary point q.
inline Vec2 inward_normal(const ApparatusGeometry& geom, DomainIndex wall, Vec2 q) {
  switch (wall) {
    case DomainIndex::D1: return {0.0, 1.0};
    case DomainIndex::D2: return {1.0, 0.0};
    default: break;
  }
  if (const auto* arc = std::get_if<ArcHypotenuse>(&geom.hypotenuse())) return normalized(q - arc->center);
  return {-1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2};
}

namespace detail {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  DomainIndex wall = DomainIndex::Exterior;
};

inline Hit next_hit(const ApparatusGeometry& geom, Vec2 p, Vec2 d, std::optional<DomainIndex> last) {
  const double l = geom.leg();
  const double tol = 1e-12 * l;
  Hit best;
  auto offer = [&](double t, DomainIndex w) {
    if (t > 0.0 && t < best.t) best = {t, w};
  };
  if (last != DomainIndex::D1 && d.y < 0.0) {
    const double t = -p.y / d.y;
    const double x = p.x + t * d.x;
    if (x >= -tol && x <= l + tol) offer(t, DomainIndex::D1);
  }
  if (last != DomainIndex::D2 && d.x < 0.0) {
    const double t = -p.x / d.x;
    const double y = p.y + t * d.y;
    if (y >= -tol && y <= l + tol) offer(t, DomainIndex::D2);
  }
  if (last != DomainIndex::D4) {
    if (const auto* arc = std::get_if<ArcHypotenuse>(&geom.hypotenuse())) {
      const Vec2 r = p - arc->center;
      const double b = dot(d, r);
      const double c = dot(r, r) - arc->radius * arc->radius;
      const double disc = b * b - c;
      if (b < 0.0 && disc >= 0.0) {
        // nearer root, written to avoid cancellation
        const double t = c / (-b + std::sqrt(disc));
        const Vec2 q = p + d * t;
        if (q.x >= -tol && q.y >= -tol) offer(t, DomainIndex::D4);
      }
    } else {
      const double rate = d.x + d.y;
      if (rate > 0.0) offer((l - p.x - p.y) / rate, DomainIndex::D4);
    }
  }
  return best;
}

inline void check_corner(const ApparatusGeometry& geom, Vec2 q) {
  const double l = geom.leg();
  const double tol = 1e-12 * l;
  const Vec2 corners[3] = {{0.0, 0.0}, {l, 0.0}, {0.0, l}};
  for (const auto& c : corners) {
    if (norm(q - c) <= tol)
      fail(ErrorKind::kNumeric, "corner singularity at (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")");
  }
}

/// Snap a hit point onto its wall and reflect the direction.
inline void reflect(const ApparatusGeometry& geom, DomainIndex wall, Vec2& q, Vec2& d) {
  switch (wall) {
    case DomainIndex::D1:
      q.y = 0.0;
      d.y = -d.y;
      return;
    case DomainIndex::D2:
      q.x = 0.0;
      d.x = -d.x;
      return;
    default: break;
  }
  if (const auto* arc = std::get_if<ArcHypotenuse>(&geom.hypotenuse())) {
    const Vec2 n = normalized(q - arc->center);
    q = arc->center + n * arc->radius;
    d = normalized(d - n * (2.0 * dot(d, n)));
  } else {
    d = {-d.y, -d.x};
  }
}

}  // namespace detail

/// Moves a state through the billiard flow. Keeps the last wall so a point sitting on a
/// wall is not re-hit at t = 0.
class Billiard {
 public:
  Billiard(const ApparatusGeometry& geom, ClassicalState s) : geom_(geom), s_(s) {
    require(std::abs(norm(s.direction) - 1.0) < 1e-12, "direction must be a unit vector");
    require(geom.inside_billiard(s.position), "classical state must start inside the billiard");
  }

  const ClassicalState& state() const { return s_; }

  /// Flight to the next wall and reflection there.
  Bounce bounce() {
    const auto hit = detail::next_hit(geom_, s_.position, s_.direction, last_);
    if (!std::isfinite(hit.t)) fail(ErrorKind::kNumeric, "trajectory escaped the billiard");
    Vec2 q = s_.position + s_.direction * hit.t;
    detail::check_corner(geom_, q);
    Bounce b;
    b.theta_in = angle_of(s_.direction);
    detail::reflect(geom_, hit.wall, q, s_.direction);
    b.theta_out = angle_of(s_.direction);
    b.point = q;
    b.wall = hit.wall;
    s_.position = q;
    s_.path_length += hit.t;
    b.path_length = s_.path_length;
    last_ = hit.wall;
    return b;
  }

  /// Distance to the next wall along the current direction.
  double free_path() const { return detail::next_hit(geom_, s_.position, s_.direction, last_).t; }

  /// Advance by exactly `ds` of path length, bouncing as needed.
  void advance(double ds) {
    while (ds > 0.0) {
      const double t = free_path();
      if (!std::isfinite(t)) fail(ErrorKind::kNumeric, "trajectory escaped the billiard");
      if (t > ds) {
        s_.position = s_.position + s_.direction * ds;
        s_.path_length += ds;
        return;
      }
      bounce();
      ds -= t;
    }
  }

  /// Replace the phase-space point (used for renormalisation); the new point is in flight.
  void reset(Vec2 position, Vec2 direction) {
    s_.position = position;
    s_.direction = normalized(direction);
    last_.reset();
  }

 private:
  const ApparatusGeometry& geom_;
  ClassicalState s_;
  std::optional<DomainIndex> last_;
};

inline Trajectory trace_trajectory(const ClassicalState& state, const ApparatusGeometry& geom, std::size_t n_bounces) {
  require(n_bounces >= 1, "n_bounces must be at least 1");
  Billiard b(geom, state);
  Trajectory tr;
  tr.bounces.reserve(n_bounces);
  for (std::size_t k = 0; k < n_bounces; ++k) tr.bounces.push_back(b.bounce());
  tr.final_state = b.state();
  tr.path_length = b.state().path_length - state.path_length;
  return tr;
}

/// Number of clusters among angles on the circle, where neighbours closer than `bin` merge.
inline std::size_t count_distinct_angles(std::vector<double> angles, double bin = 1e-9) {
  if (angles.empty()) return 0;
  std::sort(angles.begin(), angles.end());
  std::size_t clusters = 1;
  for (std::size_t k = 1; k < angles.size(); ++k)
    if (angles[k] - angles[k - 1] > bin) ++clusters;
  // wrap-around: the last cluster may continue through 2 pi into the first
  if (clusters > 1 && angles.front() + 2.0 * std::numbers::pi - angles.back() <= bin) --clusters;
  return clusters;
}

/// Distinct outgoing directions over the first n bounces.
inline std::size_t direction_census(const ApparatusGeometry& geom, const ClassicalState& state, std::size_t n_bounces) {
  require(n_bounces >= 1, "n_bounces must be at least 1");
  const auto tr = trace_trajectory(state, geom, n_bounces);
  std::vector<double> angles;
  angles.reserve(tr.bounces.size());
  for (const auto& b : tr.bounces) angles.push_back(b.theta_out);
  return count_distinct_angles(std::move(angles));
}

/// Census at increasing checkpoints from a single trajectory.
inline std::vector<std::size_t> direction_census_growth(const ApparatusGeometry& geom, const ClassicalState& state,
                                                        const std::vector<std::size_t>& checkpoints) {
  require(!checkpoints.empty() && std::is_sorted(checkpoints.begin(), checkpoints.end()),
          "checkpoints must be sorted and nonempty");
  const auto tr = trace_trajectory(state, geom, checkpoints.back());
  std::vector<std::size_t> out;
  for (auto n : checkpoints) {
    std::vector<double> a;
    for (std::size_t k = 0; k < n; ++k) a.push_back(tr.bounces[k].theta_out);
    out.push_back(count_distinct_angles(std::move(a)));
  }
  return out;
}

inline Vec2 perpendicular(Vec2 d) { return {-d.y, d.x}; }

namespace detail {

/// Phase-space separation at equal path length: position difference plus direction difference
/// (unit speed, so both parts are lengths per unit path).
inline double separation(const ClassicalState& a, const ClassicalState& b) {
  const Vec2 dq = b.position - a.position;
  const Vec2 dp = b.direction - a.direction;
  return std::sqrt(dot(dq, dq) + dot(dp, dp));
}

}  // namespace detail

struct LyapunovOptions {
  double initial_offset = 1e-9;
  double renormalize_at = 1e-6;
};

/// Benettin estimate of the largest Lyapunov exponent per unit path length. The twin starts
/// displaced perpendicular to the flow by `initial_offset`; both are compared half way through
/// each free flight of the reference and pulled back whenever they drift beyond `renormalize_at`.
inline double lyapunov_exponent(const ApparatusGeometry& geom, const ClassicalState& state, std::size_t n_bounces,
                                LyapunovOptions opt = {}) {
  require(n_bounces >= 1, "n_bounces must be at least 1");
  require(opt.initial_offset >= 0.0 && opt.renormalize_at > opt.initial_offset,
          "renormalisation threshold must exceed the initial offset");
  if (opt.initial_offset == 0.0) return 0.0;
  Billiard ref(geom, state);
  ClassicalState ts = state;
  ts.position = state.position + perpendicular(state.direction) * opt.initial_offset;
  Billiard twin(geom, ts);
  double log_sum = 0.0;
  double d_last = opt.initial_offset;
  for (std::size_t k = 0; k < n_bounces; ++k) {
    ref.advance(0.5 * ref.free_path());
    twin.advance(ref.state().path_length - twin.state().path_length);
    const double d = detail::separation(ref.state(), twin.state());
    d_last = d;
    if (d > opt.renormalize_at) {
      log_sum += std::log(d / opt.initial_offset);
      const double f = opt.initial_offset / d;
      const auto& r = ref.state();
      const auto& w = twin.state();
      twin.reset(r.position + (w.position - r.position) * f, r.direction + (w.direction - r.direction) * f);
      d_last = opt.initial_offset;
    }
    ref.advance(ref.free_path());  // finish the flight, including the bounce
    twin.advance(ref.state().path_length - twin.state().path_length);
  }
  log_sum += std::log(d_last / opt.initial_offset);
  const double total = ref.state().path_length - state.path_length;
  return log_sum / total;
}

struct DeviationSample {
  double path_length;
  double separation;
  double angle_difference;  // wrapped into [0, pi]
};

/// Two initially parallel rays a perpendicular distance `offset` apart, compared at equal
/// path length at every bounce of the reference ray.
inline std::vector<DeviationSample> parallel_deviation(const ApparatusGeometry& geom, const ClassicalState& state,
                                                       double offset, std::size_t n_bounces) {
  require(n_bounces >= 1, "n_bounces must be at least 1");
  std::vector<DeviationSample> out;
  out.reserve(n_bounces);
  Billiard ref(geom, state);
  ClassicalState ts = state;
  ts.position = state.position + perpendicular(state.direction) * offset;
  Billiard twin(geom, ts);
  for (std::size_t k = 0; k < n_bounces; ++k) {
    const double before = ref.state().path_length;
    ref.bounce();
    twin.advance(ref.state().path_length - before);
    const auto& a = ref.state();
    const auto& b = twin.state();
    double da = std::abs(angle_of(a.direction) - angle_of(b.direction));
    if (da > std::numbers::pi) da = 2.0 * std::numbers::pi - da;
    out.push_back({a.path_length - state.path_length, norm(b.position - a.position), da});
  }
  return out;
}

/// Least-squares slope of ln(separation) against path length over samples with
/// lo < separation < hi.
inline double deviation_growth_rate(const std::vector<DeviationSample>& s, double lo, double hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& p : s) {
    if (!(p.separation > lo && p.separation < hi)) continue;
    const double y = std::log(p.separation);
    sx += p.path_length;
    sy += y;
    sxx += p.path_length * p.path_length;
    sxy += p.path_length * y;
    ++n;
  }
  if (n < 2) fail(ErrorKind::kInvalidInput, "too few samples in the separation window for a growth fit");
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  if (den <= 0.0) fail(ErrorKind::kInvalidInput, "degenerate growth fit");
  return (dn * sxy - sx * sy) / den;
}

inline std::string_view wall_name(DomainIndex d) { return to_string(d); }

/// CSV: bounce, x, y, theta, wall.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "bounce,x,y,theta,wall\n";
  os.precision(17);
  for (std::size_t k = 0; k < tr.bounces.size(); ++k) {
    const auto& b = tr.bounces[k];
    os << k << ',' << b.point.x << ',' << b.point.y << ',' << b.theta_out << ',' << wall_name(b.wall) << '\n';
  }
}

}  // namespace qbil::classical
