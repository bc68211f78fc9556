#pragma once

// Resonance pole closest to the real axis for a wall of radius a and the decoherence time
// it implies:
//
//   beta0 = R0 - i I0,  L = ln(2 U0^(nu+2) / A^2),
//   R0 = U0 - (nu + 2) / (4 U0) L,   I0 = L / 2,
//   gamma = hbar^2 R0 I0 / (2 M a^2),   t_D = hbar / gamma = 2 M a^2 / (hbar R0 I0).
//
// U0 and A are supplied by the caller. nu is the order of the first non-vanishing derivative
// of the wall potential at the boundary. A flat wall (a = infinity) never decoheres.

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "qbil/error.hpp"

namespace qbil::poles {

inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

/// CODATA values used by the SI presets.
inline constexpr double kElectronMass = 9.1093837015e-31;  // kg
inline constexpr double kHbar = 1.054571817e-34;           // J s

struct WallParams {
  double u0 = 0.0;
  double a_coeff = 0.0;
  unsigned wall_order = 0;
  double radius = kInfiniteRadius;
  double mass = 1.0;
  double hbar = 1.0;
};

struct PoleResult {
  double r0 = 0.0;
  double i0 = 0.0;
  double gamma = 0.0;
  double t_d = 0.0;
};

/// beta0 = R0 - i I0.
inline std::complex<double> pole_beta0(double u0, double a_coeff, unsigned wall_order) {
  require(u0 > 0.0, "U0 must be positive");
  require(a_coeff != 0.0, "A must be nonzero");
  const double n = static_cast<double>(wall_order) + 2.0;
  // ln(2 U0^n / A^2) evaluated in log space so large orders do not overflow.
  const double log_ratio = std::log(2.0) + n * std::log(u0) - 2.0 * std::log(std::abs(a_coeff));
  if (!(log_ratio > 0.0)) fail(ErrorKind::kInvalidInput, "pole formula outside validity (I0 <= 0)");
  const double r0 = u0 - n / (4.0 * u0) * log_ratio;
  const double i0 = 0.5 * log_ratio;
  return {r0, -i0};
}

inline std::complex<double> pole_beta0(const WallParams& w) { return pole_beta0(w.u0, w.a_coeff, w.wall_order); }

/// gamma and t_D for a pole beta0 and wall radius a; a = infinity gives gamma = 0, t_D = infinity.
inline PoleResult decoherence_time(std::complex<double> beta0, double radius, double mass, double hbar) {
  require(mass > 0.0 && hbar > 0.0, "mass and hbar must be positive");
  require(radius > 0.0, "wall radius must be positive (or infinite)");
  PoleResult r;
  r.r0 = beta0.real();
  r.i0 = -beta0.imag();
  const double product = r.r0 * r.i0;
  if (!(product > 0.0)) fail(ErrorKind::kInvalidInput, "R0 * I0 must be positive");
  if (std::isinf(radius)) {
    r.gamma = 0.0;
    r.t_d = std::numeric_limits<double>::infinity();
    return r;
  }
  r.gamma = hbar * hbar * product / (2.0 * mass * radius * radius);
  r.t_d = hbar / r.gamma;
  return r;
}

inline PoleResult decoherence_time(const WallParams& w) {
  return decoherence_time(pole_beta0(w), w.radius, w.mass, w.hbar);
}

/// Decoherence time directly from the product R0 * I0 (for inputs quoted that way).
inline double decoherence_time_from_product(double r0_i0, double radius, double mass, double hbar) {
  require(r0_i0 > 0.0, "R0 * I0 must be positive");
  require(mass > 0.0 && hbar > 0.0 && radius > 0.0, "mass, hbar and radius must be positive");
  if (std::isinf(radius)) return std::numeric_limits<double>::infinity();
  return 2.0 * mass * radius * radius / (hbar * r0_i0);
}

/// R0 * I0 needed for a target t_D (inverse of the relation above).
inline double product_for_time(double t_d, double radius, double mass, double hbar) {
  require(t_d > 0.0 && radius > 0.0 && mass > 0.0 && hbar > 0.0, "inputs must be positive");
  return 2.0 * mass * radius * radius / (hbar * t_d);
}

/// Time unit of the natural system hbar = M = a = 1 expressed in the caller's units.
inline double natural_time_unit(double radius, double mass, double hbar) { return mass * radius * radius / hbar; }

struct SweepPoint {
  double radius;
  double gamma;
  double t_d;
};

/// Log-spaced sweep of the wall radius at fixed pole coefficients.
inline std::vector<SweepPoint> sweep_radius(const WallParams& w, double a_min, double a_max, std::size_t n) {
  require(n >= 2, "sweep needs at least two points");
  require(a_min > 0.0 && a_max > a_min && std::isfinite(a_max), "sweep bounds must satisfy 0 < a_min < a_max");
  const auto beta = pole_beta0(w);
  std::vector<SweepPoint> out;
  out.reserve(n);
  const double la = std::log(a_min), lb = std::log(a_max);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = std::exp(la + (lb - la) * static_cast<double>(k) / static_cast<double>(n - 1));
    const auto r = decoherence_time(beta, a, w.mass, w.hbar);
    out.push_back({a, r.gamma, r.t_d});
  }
  return out;
}

}  // namespace qbil::poles
