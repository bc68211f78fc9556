// qbil: command-line front end for the billiard decoherence lab.
//
//   qbil simulate  -c run.toml -o out/straight [--seal-slit1 | --seal-slit2]
//   qbil analyze   -c run.toml -o out/screen --both A --only1 B --only2 C
//   qbil classical -c run.toml -o out/orbit
//   qbil spectrum  -c run.toml -o out/levels
//   qbil poles     -c poles.toml -o out/td [--a inf]
//   qbil sid       -c sid.toml -o out/rl
//
// Exit codes: 0 ok, 2 config, 3 numeric, 4 io, 5 invalid input.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qbil/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::string output;
  bool force = false;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "configuration file (TOML subset)");
  sub->add_option("-o,--output", c.output, "output directory (relative paths go under $QBIL_OUTPUT_ROOT)")
      ->required();
  sub->add_flag("-f,--force", c.force, "write into a non-empty output directory");
  sub->add_option("-t,--threads", c.threads, "worker threads for the propagator");
  sub->add_option("-s,--seed", c.seed, "override the config seed");
}

qbil::ExperimentConfig load(const Common& c) {
  auto cfg = c.config.empty() ? qbil::ExperimentConfig{} : qbil::load_config(c.config);
  if (c.threads) {
    cfg.grid.threads = *c.threads;
    cfg.present.insert("grid.threads");
  }
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.present.insert(".seed");
  }
  return cfg;
}

double parse_radius(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  qbil::fail(qbil::ErrorKind::kConfig, "--a expects a number or inf, got '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Billiard decoherence lab: two-slit wave simulation, classical orbits, spectra, poles, SID"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qbil::kVersion);

  Common common;
  auto* simulate = app.add_subcommand("simulate", "time-dependent two-slit run");
  add_common(simulate, common);
  bool seal1 = false, seal2 = false;
  simulate->add_flag("--seal-slit1", seal1, "close slit 1 (left)");
  simulate->add_flag("--seal-slit2", seal2, "close slit 2 (right)");

  auto* analyze = app.add_subcommand("analyze", "p = p1 + p2 + p_int from a both/only-1/only-2 triplet");
  add_common(analyze, common);
  std::string both, only1, only2;
  analyze->add_option("--both", both, "run directory with both slits open")->required();
  analyze->add_option("--only1", only1, "run directory with slit 2 sealed")->required();
  analyze->add_option("--only2", only2, "run directory with slit 1 sealed")->required();

  auto* classical = app.add_subcommand("classical", "ray trajectory, direction census and Lyapunov exponent");
  add_common(classical, common);

  auto* spectrum = app.add_subcommand("spectrum", "Dirichlet levels of the billiard");
  add_common(spectrum, common);

  auto* poles = app.add_subcommand("poles", "resonance pole and decoherence time");
  add_common(poles, common);
  std::string radius;
  poles->add_option("--a", radius, "wall radius of curvature (number or inf)");

  auto* sid = app.add_subcommand("sid", "envelope scan of the interference term");
  add_common(sid, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qbil::exit_code(qbil::ErrorKind::kConfig);
  }

  try {
    auto cfg = load(common);
    const auto dir = qbil::resolve_output_dir(common.output);
    const auto t0 = std::chrono::steady_clock::now();
    std::string name;
    qbil::io::Summary summary;
    if (*simulate) {
      name = "simulate";
      cfg.run.seal_slit1 = cfg.run.seal_slit1 || seal1;
      cfg.run.seal_slit2 = cfg.run.seal_slit2 || seal2;
      qbil::OutputDir out(dir, common.force);
      summary = qbil::run_simulate(cfg, out);
      out.finish(name, cfg, summary, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else if (*analyze) {
      name = "analyze";
      // analysis settings default to those of the both-slits run
      if (common.config.empty()) cfg = qbil::load_config((std::filesystem::path(both) / "config.toml").string());
      qbil::OutputDir out(dir, common.force);
      summary = qbil::run_analyze(cfg, both, only1, only2, out);
      out.finish(name, cfg, summary, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else if (*classical) {
      name = "classical";
      qbil::OutputDir out(dir, common.force);
      summary = qbil::run_classical(cfg, out);
      out.finish(name, cfg, summary, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else if (*spectrum) {
      name = "spectrum";
      qbil::OutputDir out(dir, common.force);
      summary = qbil::run_spectrum(cfg, out);
      out.finish(name, cfg, summary, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else if (*poles) {
      name = "poles";
      if (!radius.empty()) {
        cfg.poles.radius = parse_radius(radius);
        cfg.present.insert("poles.radius");
      }
      qbil::OutputDir out(dir, common.force);
      summary = qbil::run_poles(cfg, out);
      out.finish(name, cfg, summary, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else if (*sid) {
      name = "sid";
      qbil::OutputDir out(dir, common.force);
      summary = qbil::run_sid(cfg, out);
      out.finish(name, cfg, summary, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    for (const auto& [k, v] : summary.rows()) std::cout << k << " = " << v << "\n";
    std::cout << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const qbil::Error& e) {
    std::cerr << "qbil: " << e.what() << "\n";
    return qbil::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "qbil: " << e.what() << "\n";
    return qbil::exit_code(qbil::ErrorKind::kIo);
  }
}
