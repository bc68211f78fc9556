#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qbil/error.hpp"
#include "qbil/geometry.hpp"
#include "qbil/propagator.hpp"
#include "qbil/screen.hpp"
#include "qbil/wavefield.hpp"

namespace qbil {

/// Probability below a given row (e.g. everything that has leaked through the slit screen),
/// sampled every `cadence` steps.
class ProbeRecorder {
 public:
  ProbeRecorder(const GridSpec& grid, std::size_t below_row, std::size_t cadence)
      : below_row_(below_row), cadence_(cadence), dt_(grid.dt) {
    require(cadence > 0, "recorder cadence must be positive");
    require(below_row <= grid.ny, "probe row outside the grid");
  }

  void observe(const WaveField& f, std::size_t step) {
    if (step % cadence_ != 0) return;
    double s = 0.0;
    for (std::size_t k = 0; k < below_row_ * f.nx; ++k) s += std::norm(f.psi[k]);
    samples_.emplace_back(static_cast<double>(step) * dt_, s * f.dx * f.dy);
  }

  const std::vector<std::pair<double, double>>& samples() const { return samples_; }

 private:
  std::size_t below_row_, cadence_;
  double dt_;
  std::vector<std::pair<double, double>> samples_;
};

/// Hands the field to a sink every `cadence` steps (snapshot writers, custom probes).
class CallbackRecorder {
 public:
  CallbackRecorder(std::size_t cadence, std::function<void(const WaveField&, std::size_t)> sink)
      : cadence_(cadence), sink_(std::move(sink)) {
    require(cadence > 0, "recorder cadence must be positive");
  }

  void observe(const WaveField& f, std::size_t step) {
    if (step % cadence_ == 0) sink_(f, step);
  }

 private:
  std::size_t cadence_;
  std::function<void(const WaveField&, std::size_t)> sink_;
};

using Recorder = std::variant<FilmRecorder, ProbeRecorder, CallbackRecorder>;

struct SimulationResult {
  WaveField field;
  std::vector<Recorder> recorders;
  std::size_t steps = 0;
};

/// Applies n_steps Strang steps. Recorders see the field before the first step (step 0) and
/// after every step k = 1..n_steps-1, i.e. the states at t = k dt for k in [0, n_steps).
inline SimulationResult evolve(WaveField field, Propagator& prop, std::size_t n_steps,
                               std::vector<Recorder> recorders = {}, std::size_t nan_check_every = 100) {
  auto observe_all = [&](std::size_t step) {
    for (auto& r : recorders) std::visit([&](auto& rec) { rec.observe(field, step); }, r);
  };
  for (std::size_t s = 0; s < n_steps; ++s) {
    observe_all(s);
    prop.step(field);
    if (nan_check_every > 0 && ((s + 1) % nan_check_every == 0 || s + 1 == n_steps)) check_finite(field, s + 1);
  }
  return {std::move(field), std::move(recorders), n_steps};
}

inline SimulationResult evolve(WaveField field, const PotentialField& pot, const GridSpec& grid, std::size_t n_steps,
                               std::vector<Recorder> recorders = {}) {
  if (n_steps == 0) return {std::move(field), std::move(recorders), 0};
  Propagator prop(pot, grid);
  return evolve(std::move(field), prop, n_steps, std::move(recorders));
}

}  // namespace qbil
