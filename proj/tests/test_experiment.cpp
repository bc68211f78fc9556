#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qbil/experiment.hpp"

using namespace qbil;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("qbil_test_experiment_" + name);
  fs::remove_all(p);
  return p;
}

/// A coarse, short version of the golden run: enough for the plumbing, not for physics.
ExperimentConfig quick_config() {
  auto c = parse_config(R"(
seed = 3
[grid]
nx = 160
dt = 2e-5
[packet]
x0 = 0.5
y0 = 0.18
sigma = 0.034
kx = 0.0
ky = -100.0
[run]
n_steps = 1500
snapshot_cadence = 500
probe_cadence = 100
)",
                        "quick.toml");
  return c;
}

io::Summary simulate_into(const ExperimentConfig& c, const fs::path& dir) {
  OutputDir out(dir, true);
  auto s = run_simulate(c, out);
  out.finish("simulate", c, s, 0.0);
  return s;
}

}  // namespace

TEST(Experiment, OutputDirRefusesNonEmptyWithoutForce) {
  const auto d = scratch("nonempty");
  fs::create_directories(d);
  std::ofstream(d / "x") << "1";
  try {
    OutputDir o(d, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find("--force"), std::string::npos);
  }
  EXPECT_NO_THROW(OutputDir(d, true));
  EXPECT_NO_THROW(OutputDir(scratch("fresh") / "a" / "b", false));
}

TEST(Experiment, OutputRootVariable) {
  ::setenv(kOutputRootVariable, "/tmp/root", 1);
  EXPECT_EQ(resolve_output_dir("run"), fs::path("/tmp/root/run"));
  EXPECT_EQ(resolve_output_dir("/abs/run"), fs::path("/abs/run"));
  ::unsetenv(kOutputRootVariable);
  EXPECT_EQ(resolve_output_dir("run"), fs::path("run"));
}

TEST(Experiment, PolesRunWritesManifestWithChecksums) {
  auto c = load_config(std::string(QBIL_SOURCE_DIR) + "/configs/poles_electron.toml");
  const auto d = scratch("poles");
  OutputDir out(d, false);
  const auto s = run_poles(c, out);
  out.finish("poles", c, s, 0.1);
  const auto summary = io::read_summary(d / "summary.csv");
  EXPECT_NEAR(io::summary_number(summary, "t_d"), 1.0, 1e-9);
  const auto m = nlohmann::json::parse(io::read_file(d / "manifest.json"));
  EXPECT_EQ(m["subcommand"], "poles");
  EXPECT_NEAR(m["summary"]["t_d"].get<double>(), 1.0, 1e-9);
  ASSERT_TRUE(m["files"].contains("sweep.csv"));
  for (const auto& [name, sha] : m["files"].items()) EXPECT_EQ(io::sha256_file(d / name), sha.get<std::string>());

  c.poles.radius = poles::kInfiniteRadius;
  c.poles.sweep_points = 0;
  OutputDir flat(scratch("poles_flat"), false);
  const auto f = run_poles(c, flat);
  EXPECT_TRUE(std::isinf(io::summary_number(f.rows(), "t_d")));
  EXPECT_EQ(io::summary_number(f.rows(), "gamma"), 0.0);
}

TEST(Experiment, SidRunFiles) {
  const auto c = load_config(std::string(QBIL_SOURCE_DIR) + "/configs/sid_gaussian.toml");
  const auto d = scratch("sid");
  OutputDir out(d, false);
  const auto s = run_sid(c, out);
  const auto env = io::read_csv(d / "envelope.csv");
  EXPECT_EQ(env.header, (std::vector<std::string>{"radius", "envelope", "analytic"}));
  EXPECT_EQ(env.rows.size(), c.sid.n_points);
  EXPECT_EQ(io::read_csv(d / "pint.csv").header, (std::vector<std::string>{"x", "p_int"}));
  const auto rows = io::read_summary(d / "summary.csv");
  bool found = false;
  for (const auto& [k, v] : rows)
    if (k == "verdict") {
      EXPECT_EQ(v, "DECAYS");
      found = true;
    }
  EXPECT_TRUE(found);
  EXPECT_LT(io::summary_number(rows, "max_envelope_deviation"), 1e-6);
}

TEST(Experiment, MissingKeysAreReportedPerSubcommand) {
  const auto c = parse_config("[grid]\nnx = 160\n", "partial.toml");
  OutputDir out(scratch("missing"), false);
  try {
    run_simulate(c, out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("missing required key"), std::string::npos);
  }
}

TEST(Experiment, QuickSimulateAndAnalyzeTriplet) {
  auto c = quick_config();
  const auto both = scratch("both"), one = scratch("one"), two = scratch("two");
  const auto s = simulate_into(c, both);
  c.run.seal_slit2 = true;
  simulate_into(c, one);
  c.run.seal_slit2 = false;
  c.run.seal_slit1 = true;
  simulate_into(c, two);

  // products exist and round-trip
  for (const char* f : {"config.toml", "pattern.csv", "pattern_first_half.csv", "pattern_second_half.csv",
                        "probe.csv", "final.qbil", "summary.csv", "manifest.json", "snapshot_0000000.qbil",
                        "snapshot_0000500.qbil", "snapshot_0001000.qbil"})
    EXPECT_TRUE(fs::exists(both / f)) << f;
  const auto snap = io::read_snapshot(both / "snapshot_0000500.qbil");
  EXPECT_EQ(snap.nx, 160u);
  EXPECT_NEAR(snap.t, 500 * 2e-5, 1e-15);
  const auto fin = io::read_snapshot(both / "final.qbil");
  EXPECT_NEAR(norm2(fin), io::summary_number(s.rows(), "final_norm"), 1e-12);
  EXPECT_LE(io::summary_number(s.rows(), "final_norm"), 1.0 + 1e-12);
  // echoed config reloads to the same canonical text
  EXPECT_EQ(echo(load_config((both / "config.toml").string())), io::read_file(both / "config.toml"));

  OutputDir out(scratch("analyze"), false);
  const auto a = run_analyze(c, both, one, two, out);
  const auto t = io::read_csv(out.path() / "screen.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "p", "p1", "p2", "p_int"}));
  const auto p = t.values("p"), p1 = t.values("p1"), p2 = t.values("p2"), pi = t.values("p_int");
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p1[i] + p2[i] + pi[i], p[i], 1e-15 + 1e-12 * p[i]);
  EXPECT_TRUE(std::isfinite(io::summary_number(a.rows(), "cauchy_schwarz_excess")));
}

TEST(Experiment, ThreadCountDoesNotChangeBits) {
  auto c = quick_config();
  c.run.n_steps = 200;
  c.run.snapshot_cadence = 0;
  const auto a = scratch("t1"), b = scratch("t3");
  simulate_into(c, a);
  c.grid.threads = 3;
  simulate_into(c, b);
  EXPECT_EQ(io::sha256_file(a / "final.qbil"), io::sha256_file(b / "final.qbil"));
  EXPECT_EQ(io::sha256_file(a / "pattern.csv"), io::sha256_file(b / "pattern.csv"));
}
