#pragma once

// Film pattern accumulation and two-slit decomposition p = p1 + p2 + p_int.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qbil/error.hpp"
#include "qbil/grid.hpp"
#include "qbil/wavefield.hpp"

namespace qbil {

struct ScreenRecord {
  std::vector<double> x;  // film abscissae
  std::vector<double> p;  // time-integrated |psi|^2 on the film row
  std::optional<std::vector<double>> p1;
  std::optional<std::vector<double>> p2;
  std::optional<std::vector<double>> p_int;
  double t_begin = 0.0;
  double t_end = 0.0;

  std::size_t size() const { return x.size(); }
};

/// Time integration of |psi|^2 along one grid row over the step window [begin, end).
/// Samples are taken every `cadence` steps (counted from `begin`) and weighted by cadence*dt,
/// so changing the cadence only changes the quadrature resolution.
class FilmRecorder {
 public:
  FilmRecorder(const GridSpec& grid, std::size_t row, std::size_t begin_step, std::size_t end_step,
               std::size_t cadence)
      : row_(row), begin_(begin_step), end_(end_step), cadence_(cadence), dt_(grid.dt) {
    require(cadence > 0, "recorder cadence must be positive");
    require(row < grid.ny, "film row outside the grid");
    require(end_step > begin_step, "empty accumulation window");
    record_.x.resize(grid.nx);
    for (std::size_t i = 0; i < grid.nx; ++i) record_.x[i] = grid.x(i);
    record_.p.assign(grid.nx, 0.0);
    record_.t_begin = static_cast<double>(begin_step) * grid.dt;
    record_.t_end = static_cast<double>(end_step) * grid.dt;
  }

  std::size_t cadence() const { return cadence_; }

  void observe(const WaveField& f, std::size_t step) {
    if (step < begin_ || step >= end_ || (step - begin_) % cadence_ != 0) return;
    const double w = static_cast<double>(cadence_) * std::abs(dt_);
    const cplx* row = f.psi.data() + row_ * f.nx;
    for (std::size_t i = 0; i < f.nx; ++i) record_.p[i] += std::norm(row[i]) * w;
  }

  const ScreenRecord& record() const { return record_; }

 private:
  std::size_t row_, begin_, end_, cadence_;
  double dt_;
  ScreenRecord record_;
};

/// Offline accumulation over a stream of frames spaced frame_dt apart.
inline ScreenRecord accumulate_film(std::span<const WaveField> frames, const GridSpec& grid, std::size_t film_row,
                                    double frame_dt) {
  require(!frames.empty(), "empty accumulation window");
  require(film_row < grid.ny, "film row outside the grid");
  ScreenRecord r;
  r.x.resize(grid.nx);
  for (std::size_t i = 0; i < grid.nx; ++i) r.x[i] = grid.x(i);
  r.p.assign(grid.nx, 0.0);
  for (const auto& f : frames) {
    require(f.nx == grid.nx && f.ny == grid.ny, "frame dimensions differ from the grid");
    for (std::size_t i = 0; i < grid.nx; ++i) r.p[i] += std::norm(f(i, film_row)) * frame_dt;
  }
  r.t_begin = frames.front().t;
  r.t_end = frames.back().t + frame_dt;
  return r;
}

/// p_int := p_both - p1 - p2 from three runs that differ only in which slits are open.
inline ScreenRecord decompose_interference(const ScreenRecord& both, const ScreenRecord& only1,
                                           const ScreenRecord& only2) {
  const std::size_t n = both.size();
  require(only1.size() == n && only2.size() == n, "decompose: film grids differ");
  for (std::size_t i = 0; i < n; ++i)
    require(both.x[i] == only1.x[i] && both.x[i] == only2.x[i], "decompose: film abscissae differ");
  require(both.t_begin == only1.t_begin && both.t_begin == only2.t_begin && both.t_end == only1.t_end &&
              both.t_end == only2.t_end,
          "decompose: accumulation windows differ");
  ScreenRecord r = both;
  r.p1 = only1.p;
  r.p2 = only2.p;
  std::vector<double> pint(n);
  for (std::size_t i = 0; i < n; ++i) pint[i] = both.p[i] - only1.p[i] - only2.p[i];
  r.p_int = std::move(pint);
  return r;
}

/// Largest excess of |p_int| over the Cauchy-Schwarz bound 2 sqrt(p1 p2); <= 0 means satisfied.
inline double cauchy_schwarz_excess(const ScreenRecord& r) {
  require(r.p1 && r.p2 && r.p_int, "record has no decomposition");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double bound = 2.0 * std::sqrt((*r.p1)[i] * (*r.p2)[i]);
    worst = std::max(worst, std::abs((*r.p_int)[i]) - bound);
  }
  return worst;
}

/// Gaussian smoothing with full width at half maximum `fwhm` (in units of x); fwhm <= 0 is a copy.
inline std::vector<double> smooth(std::span<const double> x, std::span<const double> p, double fwhm) {
  std::vector<double> out(p.begin(), p.end());
  if (fwhm <= 0.0 || p.size() < 2) return out;
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  for (std::size_t i = 0; i < p.size(); ++i) {
    double s = 0.0, w = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double u = (x[k] - x[i]) / sigma;
      if (std::abs(u) > 4.0) continue;
      const double g = std::exp(-0.5 * u * u);
      s += g * p[k];
      w += g;
    }
    out[i] = s / w;
  }
  return out;
}

/// Fringe visibility on [x_lo, x_hi]: mean over neighbouring (maximum, minimum) pairs of the
/// smoothed pattern of (p_max - p_min) / (p_max + p_min). For p = a (1 + v cos kx) this is v.
inline double visibility(const ScreenRecord& record, double x_lo, double x_hi, double smoothing_fwhm = 0.0) {
  const auto s = smooth(record.x, record.p, smoothing_fwhm);
  std::vector<double> extrema;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (record.x[i] < x_lo || record.x[i] > x_hi) continue;
    const double a = s[i] - s[i - 1];
    const double b = s[i + 1] - s[i];
    if ((a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)) {
      // plateaus: only the first cell of a flat run counts
      if (!extrema.empty() && extrema.back() == s[i]) continue;
      extrema.push_back(s[i]);
    }
  }
  if (extrema.size() < 3) fail(ErrorKind::kInvalidInput, "no fringe structure: fewer than 3 extrema in window");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < extrema.size(); ++k) {
    const double hi = std::max(extrema[k], extrema[k + 1]);
    const double lo = std::min(extrema[k], extrema[k + 1]);
    if (hi + lo <= 0.0) continue;
    acc += (hi - lo) / (hi + lo);
    ++n;
  }
  if (n == 0) fail(ErrorKind::kInvalidInput, "no fringe structure: pattern vanishes in window");
  return acc / static_cast<double>(n);
}

/// Pearson correlation of two patterns on the same film grid.
inline double pattern_correlation(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), "pattern_correlation: patterns differ in size");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) fail(ErrorKind::kInvalidInput, "pattern_correlation: zero-variance pattern");
  return sab / std::sqrt(saa * sbb);
}

inline double pattern_correlation(const ScreenRecord& a, const ScreenRecord& b) {
  require(a.x == b.x, "pattern_correlation: film grids differ");
  return pattern_correlation(std::span<const double>(a.p), std::span<const double>(b.p));
}

/// Restriction of a record to film abscissae in [x_lo, x_hi].
inline ScreenRecord crop(const ScreenRecord& r, double x_lo, double x_hi) {
  ScreenRecord out;
  out.t_begin = r.t_begin;
  out.t_end = r.t_end;
  auto take = [&](const std::vector<double>& v) {
    std::vector<double> o;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r.x[i] >= x_lo && r.x[i] <= x_hi) o.push_back(v[i]);
    return o;
  };
  out.x = take(r.x);
  out.p = take(r.p);
  if (r.p1) out.p1 = take(*r.p1);
  if (r.p2) out.p2 = take(*r.p2);
  if (r.p_int) out.p_int = take(*r.p_int);
  return out;
}

}  // namespace qbil
