#pragma once

// Alternating-direction Crank-Nicolson propagation of i hbar psi_t = H psi with
// H = -hbar^2/2M (d_xx + d_yy) + U - iW. The 2D step is the Strang product
//
//   C_x(dt/2) C_y(dt) C_x(dt/2),   C_a(tau) = (1 + i tau H_a / 2hbar)^{-1} (1 - i tau H_a / 2hbar),
//
// where H_a carries the kinetic term along axis a and half of the potential. Each factor
// is a Cayley transform, so it is unitary for W = 0 and a contraction for W >= 0. Closed
// (Exterior) cells are decoupled rows of the tridiagonal systems and stay at zero.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <thread>
#include <vector>

#include "qbil/error.hpp"
#include "qbil/geometry.hpp"
#include "qbil/grid.hpp"
#include "qbil/wavefield.hpp"

namespace qbil {

namespace detail {

/// Run fn(begin, end) over [0, n) split into `threads` contiguous chunks. Chunks never
/// share output cells, so the result does not depend on the thread count.
template <class Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t t = std::min<std::size_t>(threads, n);
  if (t <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(t - 1);
  const std::size_t chunk = (n + t - 1) / t;
  for (std::size_t c = 1; c < t; ++c) {
    const std::size_t b = c * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
}

/// Pre-factored tridiagonal Cayley factor along one axis for a fixed tau.
/// Stored per cell in field order: explicit diagonal, coupling, and the Thomas factors.
struct AxisFactor {
  cplx beta_kappa{};             // i tau kappa / 2hbar, the off-diagonal magnitude
  std::vector<cplx> rhs_diag;    // 1 - i tau (2 kappa + V/2) / 2hbar
  std::vector<cplx> lower;       // sub-diagonal coupling of the implicit matrix (0 across closed cells)
  std::vector<cplx> inv_denom;   // 1 / (a_k - l_k c'_{k-1})
  std::vector<cplx> cprime;      // u_k / denom_k
  std::vector<unsigned char> couple_prev;  // cell and its predecessor along the axis are both open
};

}  // namespace detail

class Propagator {
 public:
  Propagator(const PotentialField& pot, const GridSpec& grid) : grid_(grid), active_(pot.size()) {
    grid.validate();
    require(pot.nx == grid.nx && pot.ny == grid.ny, "potential and grid dimensions differ");
    for (std::size_t k = 0; k < pot.size(); ++k) active_[k] = pot.active(k) ? 1 : 0;
    const double hb = grid.hbar;
    const double kx = hb * hb / (2.0 * grid.mass * grid.dx * grid.dx);
    const double ky = hb * hb / (2.0 * grid.mass * grid.dy * grid.dy);
    build(xfac_, pot, 0.5 * grid.dt, kx, /*along_x=*/true);
    build(yfac_, pot, grid.dt, ky, /*along_x=*/false);
    scratch_.resize(pot.size());
  }

  const GridSpec& grid() const { return grid_; }

  /// One Strang step of length dt (negative dt runs backwards in time).
  void step(WaveField& f) {
    require(f.nx == grid_.nx && f.ny == grid_.ny, "field and grid dimensions differ");
    sweep_x(f);
    sweep_y(f);
    sweep_x(f);
    f.t += grid_.dt;
  }

 private:
  void build(detail::AxisFactor& fac, const PotentialField& pot, double tau, double kappa, bool along_x) {
    const std::size_t n = pot.size();
    const cplx beta{0.0, tau / (2.0 * grid_.hbar)};
    fac.beta_kappa = beta * kappa;
    fac.rhs_diag.resize(n);
    fac.lower.resize(n);
    fac.inv_denom.resize(n);
    fac.cprime.resize(n);
    fac.couple_prev.resize(n);
    std::vector<cplx> lhs_diag(n);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx v{0.5 * pot.potential[k], -0.5 * pot.absorber[k]};
      const cplx h = 2.0 * kappa + v;
      lhs_diag[k] = active_[k] ? 1.0 + beta * h : cplx{1.0};
      fac.rhs_diag[k] = active_[k] ? 1.0 - beta * h : cplx{};
    }
    const std::size_t nx = grid_.nx, ny = grid_.ny;
    auto prev = [&](std::size_t i, std::size_t j) -> std::ptrdiff_t {
      if (along_x) return i > 0 ? static_cast<std::ptrdiff_t>(grid_.index(i - 1, j)) : -1;
      return j > 0 ? static_cast<std::ptrdiff_t>(grid_.index(i, j - 1)) : -1;
    };
    auto next_open = [&](std::size_t i, std::size_t j) -> bool {
      if (along_x) return i + 1 < nx && active_[grid_.index(i + 1, j)];
      return j + 1 < ny && active_[grid_.index(i, j + 1)];
    };
    const cplx off = -fac.beta_kappa;
    // Thomas factorisation; the traversal order along the axis is all that matters.
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t k = grid_.index(i, j);
        const std::ptrdiff_t p = prev(i, j);
        const bool couple = active_[k] && p >= 0 && active_[static_cast<std::size_t>(p)];
        fac.couple_prev[k] = couple ? 1 : 0;
        fac.lower[k] = couple ? off : cplx{};
        const cplx cp_prev = p >= 0 ? fac.cprime[static_cast<std::size_t>(p)] : cplx{};
        const cplx denom = lhs_diag[k] - fac.lower[k] * cp_prev;
        fac.inv_denom[k] = 1.0 / denom;
        const cplx upper = (active_[k] && next_open(i, j)) ? off : cplx{};
        fac.cprime[k] = upper * fac.inv_denom[k];
      }
    }
  }

  void sweep_x(WaveField& f) {
    const std::size_t nx = grid_.nx;
    const auto& fac = xfac_;
    detail::parallel_chunks(grid_.ny, grid_.threads, [&](std::size_t j0, std::size_t j1) {
      std::vector<cplx> d(nx);
      for (std::size_t j = j0; j < j1; ++j) {
        cplx* row = f.psi.data() + j * nx;
        const std::size_t base = j * nx;
        // forward elimination with the explicit half folded in
        cplx dprev{};
        for (std::size_t i = 0; i < nx; ++i) {
          const std::size_t k = base + i;
          cplx r = fac.rhs_diag[k] * row[i];
          if (active_[k]) {
            cplx nb{};
            if (i > 0 && active_[k - 1]) nb += row[i - 1];
            if (i + 1 < nx && active_[k + 1]) nb += row[i + 1];
            r += fac.beta_kappa * nb;
          }
          dprev = (r - fac.lower[k] * dprev) * fac.inv_denom[k];
          d[i] = dprev;
        }
        cplx next{};
        for (std::size_t i = nx; i-- > 0;) {
          next = d[i] - fac.cprime[base + i] * next;
          row[i] = next;
        }
      }
    });
  }

  void sweep_y(WaveField& f) {
    const std::size_t nx = grid_.nx, ny = grid_.ny;
    const auto& fac = yfac_;
    cplx* psi = f.psi.data();
    cplx* d = scratch_.data();
    detail::parallel_chunks(nx, grid_.threads, [&](std::size_t i0, std::size_t i1) {
      // forward elimination row by row (contiguous in i); the explicit half needs the old
      // values of rows j-1, j, j+1, which are untouched until back substitution.
      for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t base = j * nx;
        for (std::size_t i = i0; i < i1; ++i) {
          const std::size_t k = base + i;
          cplx r = fac.rhs_diag[k] * psi[k];
          if (active_[k]) {
            cplx nb{};
            if (j > 0 && active_[k - nx]) nb += psi[k - nx];
            if (j + 1 < ny && active_[k + nx]) nb += psi[k + nx];
            r += fac.beta_kappa * nb;
          }
          const cplx dprev = j > 0 ? d[k - nx] : cplx{};
          d[k] = (r - fac.lower[k] * dprev) * fac.inv_denom[k];
        }
      }
      for (std::size_t i = i0; i < i1; ++i) psi[(ny - 1) * nx + i] = d[(ny - 1) * nx + i];
      for (std::size_t j = ny - 1; j-- > 0;) {
        const std::size_t base = j * nx;
        for (std::size_t i = i0; i < i1; ++i) {
          const std::size_t k = base + i;
          psi[k] = d[k] - fac.cprime[k] * psi[k + nx];
        }
      }
    });
  }

  GridSpec grid_;
  std::vector<unsigned char> active_;
  detail::AxisFactor xfac_;
  detail::AxisFactor yfac_;
  std::vector<cplx> scratch_;
};

/// Single step without reusing factorisations; prefer Propagator in loops.
inline WaveField step(const WaveField& field, const PotentialField& pot, const GridSpec& grid) {
  Propagator prop(pot, grid);
  WaveField out = field;
  prop.step(out);
  check_finite(out, 0);
  return out;
}

}  // namespace qbil
