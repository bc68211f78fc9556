#pragma once

#include <algorithm>
#include <cstddef>

#include "qbil/error.hpp"
#include "qbil/vec2.hpp"

namespace qbil {

/// Uniform cell-centred grid plus the physical constants of the propagation.
/// Cell (i, j) has centre (x0 + (i + 1/2) dx, y0 + (j + 1/2) dy); storage is row-major (j outer).
struct GridSpec {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dt = 0.0;
  double hbar = 1.0;
  double mass = 1.0;
  unsigned threads = 1;

  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  double x(std::size_t i) const { return x0 + (static_cast<double>(i) + 0.5) * dx; }
  double y(std::size_t j) const { return y0 + (static_cast<double>(j) + 0.5) * dy; }
  Vec2 center(std::size_t i, std::size_t j) const { return {x(i), y(j)}; }
  double cell_area() const { return dx * dy; }

  /// Row whose centre is closest to height y (clamped to the grid).
  std::size_t row_of(double yy) const {
    const double f = (yy - y0) / dy - 0.5;
    if (f <= 0.0) return 0;
    return std::min(ny - 1, static_cast<std::size_t>(f + 0.5));
  }

  void validate() const {
    require(nx >= 3 && ny >= 3, "grid needs at least 3 cells per direction");
    require(dx > 0.0 && dy > 0.0, "grid spacings must be positive");
    require(dt != 0.0, "time step must be nonzero");
    require(hbar > 0.0 && mass > 0.0, "hbar and mass must be positive");
    require(threads >= 1, "thread count must be at least 1");
  }
};

/// Default accuracy bound for Crank-Nicolson stepping: 0.2 M min(dx,dy)^2 / hbar.
inline double default_time_step(double dx, double dy, double hbar, double mass) {
  const double h = std::min(dx, dy);
  return 0.2 * mass * h * h / hbar;
}

}  // namespace qbil
