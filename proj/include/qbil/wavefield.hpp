#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "qbil/error.hpp"
#include "qbil/geometry.hpp"
#include "qbil/grid.hpp"

namespace qbil {

using cplx = std::complex<double>;

/// psi(x, y, t) sampled at cell centres, row-major with j (y) outer.
struct WaveField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double t = 0.0;
  std::vector<cplx> psi;

  WaveField() = default;
  explicit WaveField(const GridSpec& grid)
      : nx(grid.nx), ny(grid.ny), dx(grid.dx), dy(grid.dy), psi(grid.size(), cplx{}) {}

  std::size_t size() const { return psi.size(); }
  cplx& operator()(std::size_t i, std::size_t j) { return psi[j * nx + i]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return psi[j * nx + i]; }

  bool operator==(const WaveField&) const = default;
};

/// Sum |psi|^2 dx dy, accumulated in storage order.
inline double norm2(const WaveField& f) {
  double s = 0.0;
  for (const auto& v : f.psi) s += std::norm(v);
  return s * f.dx * f.dy;
}

inline cplx overlap(const WaveField& a, const WaveField& b) {
  require(a.size() == b.size(), "overlap: field sizes differ");
  cplx s{};
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a.psi[k]) * b.psi[k];
  return s * (a.dx * a.dy);
}

/// Probability carried by cells with the given label.
inline double probability_in(const WaveField& f, const PotentialField& pot, DomainIndex d) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (pot.label[k] == d) s += std::norm(f.psi[k]);
  return s * f.dx * f.dy;
}

inline void check_finite(const WaveField& f, std::size_t step_index) {
  for (const auto& v : f.psi) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorKind::kNumeric, "non-finite wave function at step " + std::to_string(step_index));
  }
}

struct GaussianPacketSpec {
  Vec2 center;
  double sigma = 0.05;
  Vec2 k0;  // mean wave vector, 1/length
};

/// psi ~ exp(-|x - x0|^2 / (4 sigma^2) + i k0.x), zeroed on closed cells and normalised to 1.
/// Throws if more than 1e-6 of the probability would sit outside D0 (checked before masking).
/// When pot is null the whole grid counts as open.
inline WaveField init_gaussian(const GaussianPacketSpec& spec, const GridSpec& grid,
                               const PotentialField* pot = nullptr) {
  grid.validate();
  require(spec.sigma > 0.0, "packet width must be positive");
  require(spec.sigma >= 3.0 * std::max(grid.dx, grid.dy), "packet width must be at least 3 grid cells");
  WaveField f(grid);
  double outside = 0.0;
  double total = 0.0;
  const double inv4s2 = 1.0 / (4.0 * spec.sigma * spec.sigma);
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const Vec2 p = grid.center(i, j);
      const Vec2 d = p - spec.center;
      const double env = std::exp(-dot(d, d) * inv4s2);
      const cplx v = env * std::polar(1.0, dot(spec.k0, p));
      const std::size_t k = grid.index(i, j);
      total += env * env;
      if (pot != nullptr && pot->label[k] != DomainIndex::D0) {
        outside += env * env;
        if (!pot->active(k)) continue;
      }
      f.psi[k] = v;
    }
  }
  require(total > 0.0, "packet has no support on the grid");
  if (outside / total > 1e-6) fail(ErrorKind::kInvalidInput, "gaussian packet leaks outside D0 (mass fraction " +
                                                                 std::to_string(outside / total) + " > 1e-6)");
  const double n = std::sqrt(norm2(f));
  for (auto& v : f.psi) v /= n;
  return f;
}

/// Expectation of position.
inline Vec2 mean_position(const WaveField& f, const GridSpec& grid) {
  Vec2 m;
  double w = 0.0;
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double p = std::norm(f(i, j));
      m = m + grid.center(i, j) * p;
      w += p;
    }
  return m / w;
}

/// Expectation of momentum with central differences (exact for sin(k h)/h).
inline Vec2 mean_momentum(const WaveField& f, const GridSpec& grid) {
  cplx px{}, py{};
  double w = 0.0;
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const cplx c = std::conj(f(i, j));
      const cplx e = i + 1 < grid.nx ? f(i + 1, j) : cplx{};
      const cplx wv = i > 0 ? f(i - 1, j) : cplx{};
      const cplx n = j + 1 < grid.ny ? f(i, j + 1) : cplx{};
      const cplx s = j > 0 ? f(i, j - 1) : cplx{};
      px += c * (e - wv) / (2.0 * grid.dx);
      py += c * (n - s) / (2.0 * grid.dy);
      w += std::norm(f(i, j));
    }
  const cplx mi{0.0, -grid.hbar};
  return {(mi * px).real() / w, (mi * py).real() / w};
}

/// Second central moments: {var_x, var_y}.
inline Vec2 position_variance(const WaveField& f, const GridSpec& grid) {
  const Vec2 m = mean_position(f, grid);
  double vx = 0.0, vy = 0.0, w = 0.0;
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double p = std::norm(f(i, j));
      const Vec2 d = grid.center(i, j) - m;
      vx += d.x * d.x * p;
      vy += d.y * d.y * p;
      w += p;
    }
  return {vx / w, vy / w};
}

/// <H> with the 5-point kinetic stencil (closed cells act as psi = 0) plus the real potential.
inline double energy(const WaveField& f, const PotentialField& pot, const GridSpec& grid) {
  const double kx = grid.hbar * grid.hbar / (2.0 * grid.mass * grid.dx * grid.dx);
  const double ky = grid.hbar * grid.hbar / (2.0 * grid.mass * grid.dy * grid.dy);
  double e = 0.0, w = 0.0;
  auto at = [&](std::size_t i, std::size_t j) -> cplx {
    const std::size_t k = grid.index(i, j);
    return pot.active(k) ? f.psi[k] : cplx{};
  };
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      if (!pot.active(k)) continue;
      const cplx v = f.psi[k];
      const cplx lap_x = (i + 1 < grid.nx ? at(i + 1, j) : cplx{}) + (i > 0 ? at(i - 1, j) : cplx{}) - 2.0 * v;
      const cplx lap_y = (j + 1 < grid.ny ? at(i, j + 1) : cplx{}) + (j > 0 ? at(i, j - 1) : cplx{}) - 2.0 * v;
      const cplx hv = -kx * lap_x - ky * lap_y + pot.potential[k] * v;
      e += (std::conj(v) * hv).real();
      w += std::norm(v);
    }
  return e / w;
}

}  // namespace qbil
