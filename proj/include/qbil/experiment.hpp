#pragma once

// Subcommand drivers shared by the CLI and the acceptance checks. Each run writes into one
// output directory: the effective config echo, CSV products, a quantity,value summary and a
// manifest.json with SHA-256 checksums of every product.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qbil/classical.hpp"
#include "qbil/config.hpp"
#include "qbil/geometry.hpp"
#include "qbil/io.hpp"
#include "qbil/poles.hpp"
#include "qbil/screen.hpp"
#include "qbil/sid.hpp"
#include "qbil/simulation.hpp"
#include "qbil/spectral.hpp"

namespace qbil {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutputRootVariable = "QBIL_OUTPUT_ROOT";

/// Relative output paths are placed under $QBIL_OUTPUT_ROOT when it is set.
inline std::filesystem::path resolve_output_dir(const std::filesystem::path& requested) {
  if (requested.is_absolute()) return requested;
  if (const char* root = std::getenv(kOutputRootVariable); root != nullptr && *root != '\0')
    return std::filesystem::path(root) / requested;
  return requested;
}

/// Collects products for one output directory and writes the manifest last.
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, bool force) : dir_(std::move(dir)) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::exists(dir_, ec)) {
      if (!fs::is_directory(dir_, ec)) fail(ErrorKind::kIo, dir_.string() + " exists and is not a directory");
      if (!fs::is_empty(dir_, ec) && !force)
        fail(ErrorKind::kIo, "output directory " + dir_.string() + " is not empty (pass --force to overwrite)");
    }
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::kIo, "cannot create " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& path() const { return dir_; }

  void put(const std::string& name, std::string_view data) {
    io::write_file(dir_ / name, data);
    files_[name] = io::sha256_hex(data);
  }

  const std::map<std::string, std::string>& checksums() const { return files_; }

  void finish(const std::string& subcommand, const ExperimentConfig& c, const io::Summary& summary,
              double wall_seconds) {
    nlohmann::ordered_json m;
    m["tool"] = "qbil";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["seed"] = c.seed;
    m["threads"] = c.grid.threads;
    m["compiler"] = compiler_id();
    m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    m["wall_clock_seconds"] = wall_seconds;
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [k, v] : summary.rows()) {
      double x = 0.0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec == std::errc() && p == v.data() + v.size() && std::isfinite(x))
        s[k] = x;
      else
        s[k] = v;
    }
    m["summary"] = s;
    m["files"] = files_;
    io::write_file(dir_ / "manifest.json", m.dump(2) + "\n");
  }

  static std::string compiler_id() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

// ---------------------------------------------------------------------------------------------
// simulate

struct SimulationOutcome {
  GridSpec grid;
  std::size_t film_row = 0;
  ScreenRecord film;         // whole run
  ScreenRecord first_half;   // steps [0, n/2)
  ScreenRecord second_half;  // steps [n/2, n)
  std::vector<std::pair<double, double>> leaked;  // probability below the slit screen
  WaveField final_field;
  double final_norm = 0.0;
  double d0_fraction = 0.0;  // share of open cells labelled D0
};

/// Runs the two-slit experiment described by the config. `snapshot` (optional) receives the
/// field every run.snapshot_cadence steps.
inline SimulationOutcome simulate(const ExperimentConfig& c,
                                  const std::function<void(const WaveField&, std::size_t)>& snapshot = {}) {
  require(c.run.n_steps >= 2, "run.n_steps must be at least 2");
  const auto geom = build_apparatus(apparatus_config(c));
  SimulationOutcome out;
  out.grid = grid_for(geom, c);
  const auto pot = rasterize_potential(geom, out.grid);
  out.film_row = out.grid.row_of(geom.film_y());
  std::size_t open = 0;
  for (std::size_t k = 0; k < pot.size(); ++k) open += pot.active(k) ? 1 : 0;
  out.d0_fraction = static_cast<double>(pot.count(DomainIndex::D0)) / static_cast<double>(open);

  const GaussianPacketSpec packet{{c.packet.x0, c.packet.y0}, c.packet.sigma, {c.packet.kx, c.packet.ky}};
  auto field = init_gaussian(packet, out.grid, &pot);

  const std::size_t n = c.run.n_steps, half = n / 2;
  const std::size_t cad = std::max<std::size_t>(c.run.film_cadence, 1);
  std::vector<Recorder> rec;
  rec.emplace_back(FilmRecorder(out.grid, out.film_row, 0, n, cad));
  rec.emplace_back(FilmRecorder(out.grid, out.film_row, 0, half, cad));
  rec.emplace_back(FilmRecorder(out.grid, out.film_row, half, n, cad));
  rec.emplace_back(ProbeRecorder(out.grid, out.grid.row_of(geom.box_top()), std::max<std::size_t>(c.run.probe_cadence, 1)));
  if (snapshot && c.run.snapshot_cadence > 0) rec.emplace_back(CallbackRecorder(c.run.snapshot_cadence, snapshot));

  auto res = evolve(std::move(field), pot, out.grid, n, std::move(rec));
  out.film = std::get<FilmRecorder>(res.recorders[0]).record();
  out.first_half = std::get<FilmRecorder>(res.recorders[1]).record();
  out.second_half = std::get<FilmRecorder>(res.recorders[2]).record();
  out.leaked = std::get<ProbeRecorder>(res.recorders[3]).samples();
  out.final_field = std::move(res.field);
  out.final_field.t = static_cast<double>(n) * out.grid.dt;
  out.final_norm = norm2(out.final_field);
  return out;
}

/// Fringe numbers on the analysis window of a film record.
struct FringeSummary {
  double visibility = 0.0;
  double visibility_first = 0.0;
  double visibility_second = 0.0;
  double half_correlation = 0.0;
};

/// Visibility with "no fringe structure" counted as zero contrast.
inline double visibility_or_zero(const ScreenRecord& r, double lo, double hi, double fwhm) {
  try {
    return visibility(r, lo, hi, fwhm);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInvalidInput && std::string(e.what()).starts_with("no fringe")) return 0.0;
    throw;
  }
}

inline FringeSummary fringe_summary(const SimulationOutcome& o, const ExperimentConfig& c) {
  const double lo = c.analysis.window_lo, hi = c.analysis.window_hi, w = c.analysis.smoothing_fwhm;
  FringeSummary f;
  f.visibility = visibility_or_zero(o.film, lo, hi, w);
  f.visibility_first = visibility_or_zero(o.first_half, lo, hi, w);
  f.visibility_second = visibility_or_zero(o.second_half, lo, hi, w);
  f.half_correlation = pattern_correlation(crop(o.first_half, lo, hi), crop(o.second_half, lo, hi));
  return f;
}

inline io::Summary run_simulate(const ExperimentConfig& cfg, OutputDir& out) {
  require_keys(cfg, "simulate");
  const auto c = effective(cfg);
  out.put("config.toml", echo(c));
  std::size_t n_snap = 0;
  auto o = simulate(c, [&](const WaveField& f, std::size_t step) {
    WaveField s = f;
    s.t = static_cast<double>(step) * c.grid.dt;
    char name[48];
    std::snprintf(name, sizeof name, "snapshot_%07zu.qbil", step);
    out.put(name, io::encode_snapshot(s));
    ++n_snap;
  });
  out.put("pattern.csv", io::to_csv(io::screen_table(o.film)));
  out.put("pattern_first_half.csv", io::to_csv(io::screen_table(o.first_half)));
  out.put("pattern_second_half.csv", io::to_csv(io::screen_table(o.second_half)));
  io::CsvTable probe;
  probe.header = {"t", "below_screen"};
  for (const auto& [t, v] : o.leaked) probe.rows.push_back({t, v});
  out.put("probe.csv", io::to_csv(probe));
  out.put("final.qbil", io::encode_snapshot(o.final_field));

  const auto f = fringe_summary(o, c);
  io::Summary s;
  s.add("nx", static_cast<double>(o.grid.nx));
  s.add("ny", static_cast<double>(o.grid.ny));
  s.add("dx", o.grid.dx);
  s.add("dy", o.grid.dy);
  s.add("dt", o.grid.dt);
  s.add("t_begin", o.film.t_begin);
  s.add("t_end", o.film.t_end);
  s.add("film_y", o.grid.y(o.film_row));
  s.add("d0_fraction", o.d0_fraction);
  s.add("final_norm", o.final_norm);
  s.add("below_screen_final", o.leaked.empty() ? 0.0 : o.leaked.back().second);
  s.add("visibility", f.visibility);
  s.add("visibility_first_half", f.visibility_first);
  s.add("visibility_second_half", f.visibility_second);
  s.add("half_window_correlation", f.half_correlation);
  s.add("snapshots", static_cast<double>(n_snap + 1));
  out.put("summary.csv", s.text());
  return s;
}

// ---------------------------------------------------------------------------------------------
// analyze

/// Film record saved by a simulate run, with its accumulation window.
inline ScreenRecord load_pattern(const std::filesystem::path& run_dir) {
  const auto s = io::read_summary(run_dir / "summary.csv");
  return io::screen_from_table(io::read_csv(run_dir / "pattern.csv"), io::summary_number(s, "t_begin"),
                               io::summary_number(s, "t_end"));
}

/// Decomposes a both/only-1/only-2 triplet. Analysis settings come from `c`.
inline io::Summary run_analyze(const ExperimentConfig& c, const std::filesystem::path& both,
                               const std::filesystem::path& only1, const std::filesystem::path& only2,
                               OutputDir& out) {
  const auto rec = decompose_interference(load_pattern(both), load_pattern(only1), load_pattern(only2));
  out.put("config.toml", echo(c));
  out.put("screen.csv", io::to_csv(io::screen_table(rec)));
  const double lo = c.analysis.window_lo, hi = c.analysis.window_hi;
  const auto win = crop(rec, lo, hi);
  double pint_abs = 0.0, p_sum = 0.0;
  for (std::size_t i = 0; i < win.size(); ++i) {
    pint_abs = std::max(pint_abs, std::abs((*win.p_int)[i]));
    p_sum = std::max(p_sum, win.p[i]);
  }
  io::Summary s;
  s.add("visibility", visibility_or_zero(rec, lo, hi, c.analysis.smoothing_fwhm));
  s.add("max_abs_p_int", pint_abs);
  s.add("max_p", p_sum);
  s.add("cauchy_schwarz_excess", cauchy_schwarz_excess(win));
  out.put("summary.csv", s.text());
  return s;
}

// ---------------------------------------------------------------------------------------------
// classical

struct ClassicalOutcome {
  classical::Trajectory trajectory;
  double lyapunov = 0.0;
  double deviation_rate = 0.0;  // NaN when the separation never enters the fit window
  std::size_t census_early = 0;
  std::size_t census_full = 0;
};

inline ClassicalOutcome run_classical_analysis(const ExperimentConfig& c) {
  const auto geom = build_apparatus(apparatus_config(c));
  const classical::ClassicalState st{{c.classical.x, c.classical.y},
                                     classical::direction_from_angle(c.classical.theta), 0.0};
  require(c.classical.n_bounces >= 1, "classical.n_bounces must be at least 1");
  ClassicalOutcome o;
  o.trajectory = classical::trace_trajectory(st, geom, c.classical.n_bounces);
  std::vector<std::size_t> checkpoints = {std::min(c.classical.census_early, c.classical.n_bounces),
                                          c.classical.n_bounces};
  const auto growth = classical::direction_census_growth(geom, st, checkpoints);
  o.census_early = growth[0];
  o.census_full = growth[1];
  o.lyapunov = classical::lyapunov_exponent(geom, st, c.classical.n_bounces, {c.classical.offset, 1e-6});
  const auto dev = classical::parallel_deviation(geom, st, c.classical.offset,
                                                 std::min<std::size_t>(c.classical.n_bounces, 200));
  try {
    o.deviation_rate = classical::deviation_growth_rate(dev, 10.0 * c.classical.offset, 1e-3);
  } catch (const Error&) {
    o.deviation_rate = std::numeric_limits<double>::quiet_NaN();  // no exponential stretch to fit
  }
  return o;
}

inline io::Summary run_classical(const ExperimentConfig& cfg, OutputDir& out) {
  require_keys(cfg, "classical");
  const auto c = effective(cfg);
  out.put("config.toml", echo(c));
  const auto o = run_classical_analysis(c);
  std::ostringstream tr;
  classical::write_trajectory_csv(tr, o.trajectory);
  out.put("trajectory.csv", tr.str());
  io::Summary s;
  s.add("bounces", static_cast<double>(o.trajectory.bounces.size()));
  s.add("path_length", o.trajectory.path_length);
  s.add("census_early_bounces", static_cast<double>(std::min(c.classical.census_early, c.classical.n_bounces)));
  s.add("census_early", static_cast<double>(o.census_early));
  s.add("census_full", static_cast<double>(o.census_full));
  s.add("lyapunov", o.lyapunov);
  if (std::isnan(o.deviation_rate))
    s.add("deviation_rate", "n/a");
  else
    s.add("deviation_rate", o.deviation_rate);
  out.put("summary.csv", s.text());
  return s;
}

// ---------------------------------------------------------------------------------------------
// spectrum

inline io::Summary run_spectrum(const ExperimentConfig& cfg, OutputDir& out) {
  require_keys(cfg, "spectrum");
  const auto c = effective(cfg);
  out.put("config.toml", echo(c));
  const auto geom = build_apparatus(apparatus_config(c));
  EigenOptions opt;
  opt.seed = c.seed;
  const auto sp = billiard_spectrum(geom, c.spectrum.n, c.spectrum.levels, c.grid.hbar, c.grid.mass, opt);
  io::CsvTable t;
  t.header = {"nu", "alpha", "residual"};
  for (std::size_t i = 0; i < sp.size(); ++i)
    t.rows.push_back({static_cast<double>(i), sp.eigenvalues[i], sp.residuals[i]});
  out.put("spectrum.csv", io::to_csv(t));
  io::Summary s;
  s.add("levels", static_cast<double>(sp.size()));
  s.add("lowest", sp.eigenvalues.front());
  s.add("max_residual", *std::max_element(sp.residuals.begin(), sp.residuals.end()));
  s.add("delta_min", sp.delta_min);
  s.add("t_p", sp.delta_min > 0.0 ? poincare_time(sp, c.grid.hbar) : std::numeric_limits<double>::infinity());
  if (sp.size() >= 20)
    s.add("spacing_ratio", spacing_ratio_stats(sp));
  else
    s.add("spacing_ratio", "n/a");
  out.put("summary.csv", s.text());
  return s;
}

// ---------------------------------------------------------------------------------------------
// poles

inline io::Summary run_poles(const ExperimentConfig& cfg, OutputDir& out) {
  require_keys(cfg, "poles");
  const auto c = effective(cfg);
  out.put("config.toml", echo(c));
  const auto& p = c.poles;
  poles::WallParams w{p.u0, p.a_coeff, static_cast<unsigned>(p.wall_order), p.radius, p.mass, p.hbar};
  io::Summary s;
  if (p.r0_i0 > 0.0) {
    s.add("source", "quoted_product");
    s.add("r0_i0", p.r0_i0);
    const double td = poles::decoherence_time_from_product(p.r0_i0, p.radius, p.mass, p.hbar);
    s.add("gamma", std::isinf(td) ? 0.0 : p.hbar / td);
    s.add("t_d", td);
  } else {
    const auto r = poles::decoherence_time(w);
    s.add("source", "pole_formula");
    s.add("r0", r.r0);
    s.add("i0", r.i0);
    s.add("r0_i0", r.r0 * r.i0);
    s.add("gamma", r.gamma);
    s.add("t_d", r.t_d);
  }
  s.add("radius", p.radius);
  if (p.sweep_points > 0) {
    io::CsvTable t;
    t.header = {"radius", "gamma", "t_d"};
    if (p.r0_i0 > 0.0) {
      require(p.sweep_points >= 2 && p.sweep_min > 0.0 && p.sweep_max > p.sweep_min, "invalid sweep bounds");
      const double la = std::log(p.sweep_min), lb = std::log(p.sweep_max);
      for (std::size_t k = 0; k < p.sweep_points; ++k) {
        const double a = std::exp(la + (lb - la) * static_cast<double>(k) / static_cast<double>(p.sweep_points - 1));
        const double td = poles::decoherence_time_from_product(p.r0_i0, a, p.mass, p.hbar);
        t.rows.push_back({a, p.hbar / td, td});
      }
    } else {
      for (const auto& q : poles::sweep_radius(w, p.sweep_min, p.sweep_max, p.sweep_points))
        t.rows.push_back({q.radius, q.gamma, q.t_d});
    }
    out.put("sweep.csv", io::to_csv(t));
  }
  out.put("summary.csv", s.text());
  return s;
}

// ---------------------------------------------------------------------------------------------
// sid

inline sid::Model sid_model(const ExperimentConfig& c) {
  const auto& p = c.sid;
  if (p.kind == "gaussian") return sid::gaussian_mode_set(p.n_radial, p.n_angle, p.sigma_m, c.seed);
  if (p.kind == "sparse") return sid::sparse_mode_set(p.m0);
  return sid::random_model(p.n_blocks, p.block_size, p.sigma_m, c.seed,
                           p.weights == "gaussian" ? sid::WeightProfile::kGaussian : sid::WeightProfile::kUniform);
}

/// Window envelope of exp(-sigma^2 x^2 / hbar^2): the window [0.9 r, r] peaks at its inner end.
inline double gaussian_envelope(double r, double sigma_m, double hbar, const sid::ScanOptions& opt = {}) {
  const double x = r * (1.0 - opt.window_fraction);
  return std::exp(-sigma_m * sigma_m * x * x / (hbar * hbar));
}

struct SidOutcome {
  sid::EnvelopeScan scan;
  std::vector<double> pint;  // p_int at the scan radii
  bool renormalized = false;
  std::size_t n_modes = 0;
  double max_envelope_deviation = 0.0;  // gaussian kind: max |E/E0 - analytic| / analytic
};

inline SidOutcome run_sid_analysis(const ExperimentConfig& c) {
  const auto model = sid_model(c);
  const auto st = model.state();
  const Vec2 s{c.sid.slit_separation, 0.0};
  SidOutcome o;
  o.scan = sid::rl_decay_scan(st, model.unitaries, model.modes, s, c.sid.x_max, c.sid.n_points, c.sid.hbar);
  o.pint = sid::pint_pattern_diagonal(st, model.unitaries, model.modes, s, sid::film_points(o.scan.radius), c.sid.hbar);
  o.renormalized = st.renormalized;
  o.n_modes = model.modes.size();
  if (c.sid.kind == "gaussian") {
    const double e0 = o.scan.envelope.front();
    for (std::size_t k = 0; k < o.scan.radius.size(); ++k) {
      const double a = gaussian_envelope(o.scan.radius[k], c.sid.sigma_m, c.sid.hbar);
      o.max_envelope_deviation = std::max(o.max_envelope_deviation, std::abs(o.scan.envelope[k] / e0 - a) / a);
    }
  }
  return o;
}

inline io::Summary run_sid(const ExperimentConfig& cfg, OutputDir& out) {
  require_keys(cfg, "sid");
  const auto c = effective(cfg);
  out.put("config.toml", echo(c));
  const auto o = run_sid_analysis(c);
  io::CsvTable env;
  env.header = {"radius", "envelope"};
  if (c.sid.kind == "gaussian") env.header.push_back("analytic");
  for (std::size_t k = 0; k < o.scan.radius.size(); ++k) {
    std::vector<double> row = {o.scan.radius[k], o.scan.envelope[k]};
    if (c.sid.kind == "gaussian")
      row.push_back(o.scan.envelope.front() * gaussian_envelope(o.scan.radius[k], c.sid.sigma_m, c.sid.hbar));
    env.rows.push_back(std::move(row));
  }
  out.put("envelope.csv", io::to_csv(env));
  io::CsvTable pint;
  pint.header = {"x", "p_int"};
  for (std::size_t k = 0; k < o.pint.size(); ++k) pint.rows.push_back({o.scan.radius[k], o.pint[k]});
  out.put("pint.csv", io::to_csv(pint));
  io::Summary s;
  s.add("kind", c.sid.kind);
  s.add("modes", static_cast<double>(o.n_modes));
  s.add("renormalized", o.renormalized);
  s.add("ratio", o.scan.ratio);
  s.add("verdict", std::string(sid::to_string(o.scan.verdict)));
  if (c.sid.kind == "gaussian") s.add("max_envelope_deviation", o.max_envelope_deviation);
  out.put("summary.csv", s.text());
  return s;
}

}  // namespace qbil
