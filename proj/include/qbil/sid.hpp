#pragma once

// Finite toy model of the diagonal equilibrium state and its interference term.
//
// Modes carry a domain index i, an energy omega and a momentum label m. Modes sharing
// (i, omega) form a block; a unitary U per block maps m labels to diagonal labels p and the
// state is diagonal in p with weights rho_p. In the m basis the block density matrix is
// C_mm' = sum_p rho_p U^m_p conj(U^m'_p) and the film interference term is
//
//   p_int(x) = sum_blocks sum_mm' C_mm' e^{-i(m - m').x/hbar} e^{i(m + m').s/2hbar} + c.c.
//            = sum_blocks sum_p rho_p 2 Re[B_p(x - s/2) conj(B_p(x + s/2))],
//   B_p(y) = sum_m U^m_p e^{-i m.y/hbar}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qbil/error.hpp"
#include "qbil/vec2.hpp"

namespace qbil::sid {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

struct Mode {
  int domain = 0;
  double omega = 0.0;
  Vec2 m;
};

struct Block {
  int domain = 0;
  double omega = 0.0;
  std::vector<std::size_t> modes;  // indices into ModeSet::modes; position in this list is the m row
};

class ModeSet {
 public:
  ModeSet() = default;
  explicit ModeSet(std::vector<Mode> modes) : modes_(std::move(modes)) {
    std::map<std::pair<int, double>, std::size_t> where;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      const auto& md = modes_[k];
      require(md.omega >= 0.0 && std::isfinite(md.omega), "mode energy must be finite and nonnegative");
      const auto key = std::make_pair(md.domain, md.omega);
      auto it = where.find(key);
      if (it == where.end()) {
        it = where.emplace(key, blocks_.size()).first;
        blocks_.push_back({md.domain, md.omega, {}});
      }
      auto& b = blocks_[it->second];
      for (auto other : b.modes)
        require(!(modes_[other].m.x == md.m.x && modes_[other].m.y == md.m.y), "duplicate m label within a block");
      b.modes.push_back(k);
    }
  }

  const std::vector<Mode>& modes() const { return modes_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return modes_.size(); }
  bool empty() const { return modes_.empty(); }

 private:
  std::vector<Mode> modes_;
  std::vector<Block> blocks_;  // in order of first appearance
};

/// One unitary per block; U(row = m position in block, col = p).
struct UnitaryFamily {
  std::vector<CMatrix> blocks;
};

struct EquilibriumState {
  std::vector<std::vector<double>> weights;  // per block, per p; sums to 1 overall
  bool renormalized = false;                 // input weights did not sum to 1

  /// Block density matrix in the m basis.
  CMatrix m_basis(std::size_t block, const UnitaryFamily& u) const {
    const CMatrix& ub = u.blocks.at(block);
    Eigen::VectorXd rho(static_cast<Eigen::Index>(weights.at(block).size()));
    for (std::size_t p = 0; p < weights[block].size(); ++p) rho(static_cast<Eigen::Index>(p)) = weights[block][p];
    return ub * rho.asDiagonal() * ub.adjoint();
  }
};

inline double unitarity_defect(const CMatrix& u) {
  const auto n = u.rows();
  return (u * u.adjoint() - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

inline EquilibriumState build_equilibrium(const ModeSet& modes, const std::vector<std::vector<double>>& weights,
                                          const UnitaryFamily& unitaries, double unitarity_tol = 1e-12) {
  require(!modes.empty(), "empty mode set");
  const auto& blocks = modes.blocks();
  require(weights.size() == blocks.size(), "index mismatch: one weight vector per block expected");
  require(unitaries.blocks.size() == blocks.size(), "index mismatch: one unitary per block expected");
  double total = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto n = static_cast<Eigen::Index>(blocks[b].modes.size());
    require(static_cast<Eigen::Index>(weights[b].size()) == n, "index mismatch: weights and block size differ");
    const auto& u = unitaries.blocks[b];
    require(u.rows() == n && u.cols() == n, "index mismatch: unitary and block size differ");
    if (!(unitarity_defect(u) <= unitarity_tol)) fail(ErrorKind::kInvalidInput, "non-unitary block " + std::to_string(b));
    for (double w : weights[b]) {
      require(w >= 0.0 && std::isfinite(w), "negative weight");
      total += w;
    }
  }
  require(total > 0.0, "weights sum to zero");
  EquilibriumState s;
  s.weights = weights;
  s.renormalized = std::abs(total - 1.0) > 1e-12;
  for (auto& wb : s.weights)
    for (auto& w : wb) w /= total;
  return s;
}

namespace detail {

inline void check_shapes(const EquilibriumState& st, const UnitaryFamily& u, const ModeSet& modes) {
  require(!modes.empty(), "empty mode set");
  require(st.weights.size() == modes.blocks().size() && u.blocks.size() == modes.blocks().size(),
          "index mismatch between state, unitaries and modes");
}

inline cplx phase(Vec2 m, Vec2 y, double hbar) { return std::polar(1.0, -dot(m, y) / hbar); }

}  // namespace detail

/// Film points are (x, 0) for x in xs.
inline std::vector<Vec2> film_points(const std::vector<double>& xs) {
  std::vector<Vec2> p;
  p.reserve(xs.size());
  for (double x : xs) p.push_back({x, 0.0});
  return p;
}

/// p_int evaluated in the m basis through C_mm' (the displayed double sum).
inline std::vector<double> pint_pattern(const EquilibriumState& st, const UnitaryFamily& u, const ModeSet& modes,
                                        Vec2 s, const std::vector<Vec2>& xs, double hbar = 1.0) {
  detail::check_shapes(st, u, modes);
  require(hbar > 0.0, "hbar must be positive");
  std::vector<double> out(xs.size(), 0.0);
  const auto& blocks = modes.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const CMatrix c = st.m_basis(b, u);
    const auto n = static_cast<Eigen::Index>(blocks[b].modes.size());
    Eigen::VectorXcd a(n), v(n);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const Vec2 m = modes.modes()[blocks[b].modes[static_cast<std::size_t>(r)]].m;
        // e^{-i m.x} e^{i m.s/2} for the row index, its conjugate partner for the column index
        a(r) = detail::phase(m, xs[k] - s * 0.5, hbar);
        v(r) = detail::phase(m, xs[k] + s * 0.5, hbar);
      }
      const cplx sum = a.transpose() * c * v.conjugate();
      out[k] += 2.0 * sum.real();
    }
  }
  return out;
}

/// Same quantity evaluated in the diagonal p basis.
inline std::vector<double> pint_pattern_diagonal(const EquilibriumState& st, const UnitaryFamily& u,
                                                 const ModeSet& modes, Vec2 s, const std::vector<Vec2>& xs,
                                                 double hbar = 1.0) {
  detail::check_shapes(st, u, modes);
  require(hbar > 0.0, "hbar must be positive");
  std::vector<double> out(xs.size(), 0.0);
  const auto& blocks = modes.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& ub = u.blocks[b];
    const auto n = static_cast<Eigen::Index>(blocks[b].modes.size());
    Eigen::VectorXcd a(n), v(n);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const Vec2 m = modes.modes()[blocks[b].modes[static_cast<std::size_t>(r)]].m;
        a(r) = detail::phase(m, xs[k] - s * 0.5, hbar);
        v(r) = detail::phase(m, xs[k] + s * 0.5, hbar);
      }
      for (Eigen::Index p = 0; p < n; ++p) {
        const double rho = st.weights[b][static_cast<std::size_t>(p)];
        if (rho == 0.0) continue;
        const cplx bm = ub.col(p).dot(a.conjugate());  // sum_m U^m_p a_m
        const cplx bp = ub.col(p).dot(v.conjugate());
        out[k] += rho * 2.0 * (bm * std::conj(bp)).real();
      }
    }
  }
  return out;
}

enum class Verdict { kDecays, kPersists };

inline std::string_view to_string(Verdict v) { return v == Verdict::kDecays ? "DECAYS" : "PERSISTS"; }

struct EnvelopeScan {
  std::vector<double> radius;    // |x|; the first entry is 0
  std::vector<double> envelope;  // max |p_int| over the window ending at each radius
  Verdict verdict = Verdict::kPersists;
  double ratio = 0.0;  // E(x_max) / E(0)
};

struct ScanOptions {
  double first_fraction = 1e-2;   // smallest nonzero radius as a fraction of x_max
  double window_fraction = 0.1;   // window [r (1 - f), r]
  std::size_t window_samples = 64;
  double threshold = 1e-3;
};

/// Radii 0, then n_points - 1 geometrically spaced values ending at x_max.
inline std::vector<double> scan_radii(double x_max, std::size_t n_points, double first_fraction) {
  std::vector<double> r{0.0};
  const double lo = std::log(x_max * first_fraction), hi = std::log(x_max);
  for (std::size_t k = 0; k + 1 < n_points; ++k)
    r.push_back(std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_points - 2)));
  r.back() = x_max;
  return r;
}

/// Window envelope of |f| along the x axis at the given radii.
inline std::vector<double> window_envelope(const std::function<std::vector<double>(const std::vector<Vec2>&)>& f,
                                           const std::vector<double>& radii, const ScanOptions& opt) {
  std::vector<Vec2> pts;
  for (double r : radii) {
    if (r == 0.0) {
      pts.push_back({0.0, 0.0});
      continue;
    }
    for (std::size_t q = 0; q < opt.window_samples; ++q) {
      const double u = static_cast<double>(q) / static_cast<double>(opt.window_samples - 1);
      pts.push_back({r * (1.0 - opt.window_fraction * u), 0.0});
    }
  }
  const auto vals = f(pts);
  std::vector<double> env;
  std::size_t at = 0;
  for (double r : radii) {
    const std::size_t cnt = r == 0.0 ? 1 : opt.window_samples;
    double mx = 0.0;
    for (std::size_t q = 0; q < cnt; ++q) mx = std::max(mx, std::abs(vals[at + q]));
    env.push_back(mx);
    at += cnt;
  }
  return env;
}

inline EnvelopeScan rl_decay_scan(const EquilibriumState& st, const UnitaryFamily& u, const ModeSet& modes, Vec2 s,
                                  double x_max, std::size_t n_points, double hbar = 1.0, ScanOptions opt = {}) {
  require(!modes.empty(), "empty mode set");
  require(n_points >= 10, "rl scan needs at least 10 points");
  require(x_max > 0.0 && std::isfinite(x_max), "x_max must be positive and finite");
  require(opt.window_samples >= 2, "window needs at least 2 samples");
  EnvelopeScan out;
  out.radius = scan_radii(x_max, n_points, opt.first_fraction);
  out.envelope = window_envelope(
      [&](const std::vector<Vec2>& pts) { return pint_pattern_diagonal(st, u, modes, s, pts, hbar); }, out.radius,
      opt);
  const double e0 = out.envelope.front();
  out.ratio = e0 > 0.0 ? out.envelope.back() / e0 : 0.0;
  out.verdict = (e0 > 0.0 && out.ratio < opt.threshold) ? Verdict::kDecays : Verdict::kPersists;
  return out;
}

/// A complete model: modes, unitaries and (unnormalised) weights.
struct Model {
  ModeSet modes;
  UnitaryFamily unitaries;
  std::vector<std::vector<double>> weights;

  EquilibriumState state() const { return build_equilibrium(modes, weights, unitaries); }
};

/// Unitary whose first column is the unit vector c (Householder reflection times a phase).
inline CMatrix unitary_with_first_column(const Eigen::VectorXcd& c) {
  const auto n = c.size();
  require(n >= 1 && std::abs(c.norm() - 1.0) < 1e-12, "first column must be a unit vector");
  const cplx ph = std::abs(c(0)) > 0.0 ? c(0) / std::abs(c(0)) : cplx{1.0};
  Eigen::VectorXcd cr = c / ph;  // cr(0) real, nonnegative
  Eigen::VectorXcd v = -cr;
  v(0) += 1.0;
  CMatrix h = CMatrix::Identity(n, n);
  const double vv = v.squaredNorm();
  if (vv > 0.0) h -= (2.0 / vv) * v * v.adjoint();
  h.col(0) *= ph;
  return h;
}

/// Unitary n x n DFT, U^m_p = exp(-2 pi i m p / n) / sqrt(n).
inline CMatrix dft_unitary(std::size_t n) {
  CMatrix u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double f = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      u(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          f * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(a * b % n) / static_cast<double>(n));
  return u;
}

/// Seeded Haar-like unitary: QR of a complex Gaussian matrix with the phases of R removed.
inline CMatrix random_unitary(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = cplx{g(rng), g(rng)};
  Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

/// Gauss-Laguerre nodes and weights (weight e^-u on [0, inf)) by Golub-Welsch.
inline std::pair<std::vector<double>, std::vector<double>> gauss_laguerre(std::size_t n) {
  require(n >= 1, "quadrature order must be positive");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    j(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 2.0 * static_cast<double>(i) + 1.0;
    if (i + 1 < n) {
      j(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = static_cast<double>(i + 1);
      j(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = static_cast<double>(i + 1);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> x(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
    const double v0 = es.eigenvectors()(0, static_cast<Eigen::Index>(i));
    w[i] = v0 * v0;  // the weight function integrates to 1
  }
  return {x, w};
}

/// Continuum-sampling set: one coherent block whose m labels are a product quadrature
/// (Gauss-Laguerre in |m|^2 / 2 sigma^2, uniform in angle with a seeded rotation per ring)
/// for the isotropic Gaussian density of spread sigma. The state occupies p = 0 only and
/// U^m_0 is proportional to the quadrature weight, so B_0 is the density's characteristic
/// function exp(-sigma^2 |y|^2 / 2 hbar^2) up to a constant and
/// p_int(x) / p_int(0) = exp(-sigma^2 |x|^2 / hbar^2) for x parallel to s.
inline Model gaussian_mode_set(std::size_t n_radial, std::size_t n_angle, double sigma, std::uint64_t seed) {
  require(n_radial >= 1 && n_angle >= 1, "mode counts must be positive");
  require(sigma > 0.0, "sigma_m must be positive");
  const auto [u, wu] = gauss_laguerre(n_radial);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  std::vector<Mode> modes;
  std::vector<double> amp;
  for (std::size_t i = 0; i < n_radial; ++i) {
    const double r = sigma * std::sqrt(2.0 * u[i]);
    const double rot = uni(rng);
    for (std::size_t k = 0; k < n_angle; ++k) {
      const double th = rot + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_angle);
      modes.push_back({0, 1.0, {r * std::cos(th), r * std::sin(th)}});
      amp.push_back(wu[i] / static_cast<double>(n_angle));
    }
  }
  Eigen::VectorXcd c(static_cast<Eigen::Index>(amp.size()));
  for (std::size_t k = 0; k < amp.size(); ++k) c(static_cast<Eigen::Index>(k)) = amp[k];
  c /= c.norm();
  Model m;
  m.modes = ModeSet(std::move(modes));
  m.unitaries.blocks.push_back(unitary_with_first_column(c));
  m.weights.assign(1, std::vector<double>(amp.size(), 0.0));
  m.weights[0][0] = 1.0;
  return m;
}

/// Four-direction set (+-m0, 0), (0, +-m0) in one block, uniform superposition on p = 0.
inline Model sparse_mode_set(double m0) {
  require(m0 > 0.0, "m0 must be positive");
  Model m;
  m.modes = ModeSet({{0, 1.0, {m0, 0.0}}, {0, 1.0, {-m0, 0.0}}, {0, 1.0, {0.0, m0}}, {0, 1.0, {0.0, -m0}}});
  m.unitaries.blocks.push_back(dft_unitary(4));
  m.weights = {{1.0, 0.0, 0.0, 0.0}};
  return m;
}

enum class WeightProfile { kUniform, kGaussian };

/// Seeded random blocks: n_blocks blocks of block_size modes and Haar unitaries. Weights are
/// uniform or fall off as exp(-(omega^2 + (p / block_size)^2) / 2).
inline Model random_model(std::size_t n_blocks, std::size_t block_size, double m_scale, std::uint64_t seed,
                          WeightProfile profile = WeightProfile::kUniform) {
  require(n_blocks >= 1 && block_size >= 1, "block counts must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Model m;
  std::vector<Mode> modes;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const double omega = static_cast<double>(b + 1) * 0.5;
    for (std::size_t k = 0; k < block_size; ++k)
      modes.push_back({static_cast<int>(b % 3), omega, {m_scale * g(rng), m_scale * g(rng)}});
    m.unitaries.blocks.push_back(random_unitary(block_size, rng));
    std::vector<double> w(block_size, 1.0);
    if (profile == WeightProfile::kGaussian) {
      for (std::size_t p = 0; p < block_size; ++p) {
        const double q = static_cast<double>(p) / static_cast<double>(block_size);
        w[p] = std::exp(-0.5 * (omega * omega + q * q));
      }
    }
    m.weights.push_back(std::move(w));
  }
  m.modes = ModeSet(std::move(modes));
  return m;
}

}  // namespace qbil::sid
