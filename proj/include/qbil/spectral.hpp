#pragma once

// Low end of the Dirichlet spectrum of H = -hbar^2/2M Laplacian on a node mask, the
// recurrence time 2 pi hbar / gap_min and the mean consecutive-gap ratio.
//
// The billiard is sampled on the vertex grid x_i = i h, h = L / n, with unknowns at nodes
// strictly inside the table. For the straight hypotenuse the nodes with i + j = n sit on the
// wall, so the discrete problem is the exact lattice analogue of the continuum one:
// E = (hbar^2 / 2M)(4 / h^2)(sin^2(m pi / 2n) + sin^2(k pi / 2n)), m > k >= 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "qbil/error.hpp"
#include "qbil/geometry.hpp"

namespace qbil {

struct SpectrumData {
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> residuals;    // ||H v - E v|| / (|E| ||v||)
  double delta_min = 0.0;           // smallest non-degenerate consecutive gap
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 0.0;

  std::size_t size() const { return eigenvalues.size(); }
};

/// Node mask on an nx by ny vertex lattice with spacing h (row-major, j outer).
struct NodeMask {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double h = 0.0;
  std::vector<unsigned char> inside;
};

struct EigenOptions {
  std::size_t block = 4;          // largest multiplicity resolved exactly
  std::size_t max_basis = 2400;   // iteration cap on the Krylov basis size
  double tolerance = 1e-8;        // relative residual
  std::uint64_t seed = 12345;
};

namespace detail {

/// Dirichlet 5-point Hamiltonian on the masked nodes.
inline Eigen::SparseMatrix<double> masked_hamiltonian(const NodeMask& m, double hbar, double mass,
                                                      std::vector<std::int64_t>& index) {
  index.assign(m.nx * m.ny, -1);
  std::int64_t n = 0;
  for (std::size_t k = 0; k < index.size(); ++k)
    if (m.inside[k]) index[k] = n++;
  require(n > 0, "spectrum: mask has no interior nodes");
  const double c = hbar * hbar / (2.0 * mass * m.h * m.h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  for (std::size_t j = 0; j < m.ny; ++j)
    for (std::size_t i = 0; i < m.nx; ++i) {
      const std::int64_t r = index[j * m.nx + i];
      if (r < 0) continue;
      trip.emplace_back(r, r, 4.0 * c);
      auto link = [&](std::size_t ii, std::size_t jj) {
        const std::int64_t q = index[jj * m.nx + ii];
        if (q >= 0) trip.emplace_back(r, q, -c);
      };
      if (i > 0) link(i - 1, j);
      if (i + 1 < m.nx) link(i + 1, j);
      if (j > 0) link(i, j - 1);
      if (j + 1 < m.ny) link(i, j + 1);
    }
  Eigen::SparseMatrix<double> h(n, n);
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

/// Orthonormalise the columns of w against q[:, :used] (two passes) and then among themselves.
/// Returns the number of columns kept; columns that collapse are dropped.
inline Eigen::Index orthonormalize_block(const Eigen::MatrixXd& q, Eigen::Index used, Eigen::MatrixXd& w) {
  for (int pass = 0; pass < 2; ++pass) {
    if (used > 0) w -= q.leftCols(used) * (q.leftCols(used).transpose() * w);
  }
  Eigen::Index kept = 0;
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    Eigen::VectorXd v = w.col(c);
    const double before = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      if (used > 0) v -= q.leftCols(used) * (q.leftCols(used).transpose() * v);
      for (Eigen::Index p = 0; p < kept; ++p) v -= w.col(p).dot(v) * w.col(p);
    }
    const double after = v.norm();
    if (!(after > 1e-10 * std::max(before, 1e-300))) continue;
    w.col(kept++) = v / after;
  }
  return kept;
}

}  // namespace detail

/// Lowest k eigenvalues of the Dirichlet problem on `mask` by block Lanczos on H^-1 with full
/// reorthogonalisation. Converged when every requested pair meets the residual tolerance.
inline SpectrumData dirichlet_spectrum(const NodeMask& mask, std::size_t k, double hbar = 1.0, double mass = 1.0,
                                       EigenOptions opt = {}) {
  require(k >= 1, "spectrum: K must be at least 1");
  require(mask.h > 0.0 && mask.inside.size() == mask.nx * mask.ny, "spectrum: malformed node mask");
  require(hbar > 0.0 && mass > 0.0, "hbar and mass must be positive");
  std::vector<std::int64_t> index;
  const auto h = detail::masked_hamiltonian(mask, hbar, mass, index);
  const Eigen::Index n = h.rows();
  require(static_cast<Eigen::Index>(k) <= n, "spectrum: K exceeds the number of interior nodes");
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h);
  if (solver.info() != Eigen::Success) fail(ErrorKind::kNumeric, "spectrum: factorisation failed");

  const Eigen::Index b = static_cast<Eigen::Index>(std::max<std::size_t>(opt.block, 1));
  const Eigen::Index cap = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(opt.max_basis));
  Eigen::MatrixXd q(n, cap);
  Eigen::MatrixXd aq(n, cap);  // H^-1 q, kept for the Rayleigh-Ritz matrix
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd w(n, b);
  for (Eigen::Index c = 0; c < b; ++c)
    for (Eigen::Index r = 0; r < n; ++r) w(r, c) = gauss(rng);
  Eigen::Index used = 0;
  SpectrumData out;
  out.nx = mask.nx;
  out.ny = mask.ny;
  out.dx = mask.h;

  const Eigen::Index want = static_cast<Eigen::Index>(k);
  Eigen::Index next_check = std::max<Eigen::Index>(2 * want + 2 * b, 4 * b);
  for (;;) {
    const Eigen::Index kept = detail::orthonormalize_block(q, used, w);
    const Eigen::Index room = std::min(kept, cap - used);
    if (room <= 0 && used < want) fail(ErrorKind::kNumeric, "spectrum: Krylov space exhausted");
    for (Eigen::Index c = 0; c < room; ++c) {
      q.col(used + c) = w.col(c);
      aq.col(used + c) = solver.solve(Eigen::VectorXd(w.col(c)));
    }
    const Eigen::Index prev = used;
    used += room;
    const bool exhausted = room <= 0 || used >= cap;
    if (used >= next_check || exhausted) {
      next_check = used + std::max<Eigen::Index>(want / 2, 4 * b);
      const Eigen::MatrixXd t = q.leftCols(used).transpose() * aq.leftCols(used);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (t + t.transpose()));
      // largest theta of H^-1 <-> lowest E
      std::vector<double> e;
      std::vector<double> res;
      bool ok = used >= want;
      for (Eigen::Index r = 0; r < want && ok; ++r) {
        const Eigen::Index col = used - 1 - r;
        const double theta = es.eigenvalues()(col);
        if (!(theta > 0.0)) {
          ok = false;
          break;
        }
        const Eigen::VectorXd y = q.leftCols(used) * es.eigenvectors().col(col);
        const double energy = 1.0 / theta;
        const double rr = (h * y - energy * y).norm() / (std::abs(energy) * y.norm());
        e.push_back(energy);
        res.push_back(rr);
        if (!(rr < opt.tolerance)) ok = false;
      }
      if (ok) {
        out.eigenvalues = std::move(e);
        out.residuals = std::move(res);
        break;
      }
      if (exhausted)
        fail(ErrorKind::kNumeric, "spectrum: no convergence within " + std::to_string(used) + " Krylov vectors");
    }
    w = aq.middleCols(prev, room);
  }
  std::vector<std::size_t> order(out.eigenvalues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto c) { return out.eigenvalues[a] < out.eigenvalues[c]; });
  std::vector<double> ev, rs;
  for (auto i : order) {
    ev.push_back(out.eigenvalues[i]);
    rs.push_back(out.residuals[i]);
  }
  out.eigenvalues = std::move(ev);
  out.residuals = std::move(rs);
  return out;
}

/// Vertex-grid mask of the closed billiard: nodes strictly inside the table.
inline NodeMask billiard_mask(const ApparatusGeometry& geom, std::size_t n) {
  require(n >= 4, "spectrum: need at least 4 intervals per leg");
  NodeMask m;
  m.nx = n + 1;
  m.ny = n + 1;
  m.h = geom.leg() / static_cast<double>(n);
  m.inside.assign(m.nx * m.ny, 0);
  const bool straight = !geom.is_arc();
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i <= n; ++i) {
      bool in = false;
      if (straight) {
        in = i >= 1 && j >= 1 && i + j < n;  // exact lattice test, no rounding at the hypotenuse
      } else {
        in = geom.inside_billiard({static_cast<double>(i) * m.h, static_cast<double>(j) * m.h});
      }
      m.inside[j * m.nx + i] = in ? 1 : 0;
    }
  return m;
}

/// Unit-free square [0, side]^2 with n intervals per side; used as a degenerate test case.
inline NodeMask square_mask(double side, std::size_t n) {
  require(n >= 2 && side > 0.0, "square mask: need n >= 2 and a positive side");
  NodeMask m;
  m.nx = n + 1;
  m.ny = n + 1;
  m.h = side / static_cast<double>(n);
  m.inside.assign(m.nx * m.ny, 0);
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = 1; i < n; ++i) m.inside[j * m.nx + i] = 1;
  return m;
}

/// Gaps below rel_tol times the mean gap count as degenerate.
inline double minimum_gap(std::span<const double> levels, double rel_tol = 1e-6) {
  require(levels.size() >= 2, "need at least two levels");
  std::vector<double> e(levels.begin(), levels.end());
  std::sort(e.begin(), e.end());
  const double mean_gap = (e.back() - e.front()) / static_cast<double>(e.size() - 1);
  double best = 0.0;
  for (std::size_t i = 1; i < e.size(); ++i) {
    const double g = e[i] - e[i - 1];
    if (g <= rel_tol * mean_gap) continue;
    if (best == 0.0 || g < best) best = g;
  }
  if (!(best > 0.0)) fail(ErrorKind::kInvalidInput, "no finite gap in window");
  return best;
}

inline SpectrumData billiard_spectrum(const ApparatusGeometry& geom, std::size_t n, std::size_t k, double hbar = 1.0,
                                      double mass = 1.0, EigenOptions opt = {}) {
  auto s = dirichlet_spectrum(billiard_mask(geom, n), k, hbar, mass, opt);
  if (s.size() >= 2) {
    try {
      s.delta_min = minimum_gap(s.eigenvalues);
    } catch (const Error&) {
      s.delta_min = 0.0;
    }
  }
  return s;
}

/// Recurrence estimate t_P = 2 pi hbar / gap_min over the levels supplied.
inline double poincare_time(std::span<const double> levels, double hbar = 1.0) {
  require(hbar > 0.0, "hbar must be positive");
  return 2.0 * std::numbers::pi * hbar / minimum_gap(levels);
}

inline double poincare_time(const SpectrumData& s, double hbar = 1.0) { return poincare_time(s.eigenvalues, hbar); }

/// Cubic least-squares fit of the staircase N(E) used to unfold a spectrum.
inline std::vector<double> unfold(std::span<const double> levels) {
  std::vector<double> e(levels.begin(), levels.end());
  std::sort(e.begin(), e.end());
  const std::size_t n = e.size();
  const double lo = e.front(), span_e = std::max(e.back() - e.front(), 1e-300);
  const int deg = static_cast<int>(std::min<std::size_t>(3, n > 1 ? n - 1 : 0));
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), deg + 1);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (e[i] - lo) / span_e;
    double pw = 1.0;
    for (int d = 0; d <= deg; ++d, pw *= u) a(static_cast<Eigen::Index>(i), d) = pw;
    y(static_cast<Eigen::Index>(i)) = static_cast<double>(i);
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.row(static_cast<Eigen::Index>(i)).dot(c);
  return out;
}

/// Mean of min(g_i, g_i+1) / max(g_i, g_i+1) over consecutive unfolded gaps; degenerate gaps
/// (below 1e-6 of the mean) are removed first.
inline double spacing_ratio_stats(std::span<const double> levels) {
  require(levels.size() >= 20, "spacing ratio needs at least 20 levels");
  const auto u = unfold(levels);
  std::vector<double> gaps;
  const double mean_gap = (u.back() - u.front()) / static_cast<double>(u.size() - 1);
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double g = u[i] - u[i - 1];
    if (g > 1e-6 * std::abs(mean_gap)) gaps.push_back(g);
  }
  if (gaps.size() < 2) fail(ErrorKind::kInvalidInput, "spacing ratio: spectrum is degenerate");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < gaps.size(); ++i)
    acc += std::min(gaps[i], gaps[i + 1]) / std::max(gaps[i], gaps[i + 1]);
  return acc / static_cast<double>(gaps.size() - 1);
}

inline double spacing_ratio_stats(const SpectrumData& s) { return spacing_ratio_stats(s.eigenvalues); }

/// Lowest k continuum levels of the straight table, pi^2 (m^2 + q^2) hbar^2 / (2 M L^2), m > q >= 1.
inline std::vector<double> continuum_triangle_levels(std::size_t k, double leg = 1.0, double hbar = 1.0,
                                                     double mass = 1.0) {
  std::vector<double> e;
  const std::size_t lim = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(4 * k)))) + 4;
  for (std::size_t m = 2; m <= lim; ++m)
    for (std::size_t q = 1; q < m; ++q)
      e.push_back(std::numbers::pi * std::numbers::pi * static_cast<double>(m * m + q * q) * hbar * hbar /
                  (2.0 * mass * leg * leg));
  std::sort(e.begin(), e.end());
  e.resize(std::min(k, e.size()));
  return e;
}

}  // namespace qbil
