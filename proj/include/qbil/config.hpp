#pragma once

// Experiment configuration in a small TOML subset:
//
//   # comment
//   seed = 7                 top-level keys come before the first section
//   [geometry]
//   hypotenuse = "arc"       strings in double quotes
//   arc_sagitta = 0.05       floats (also inf, -inf), integers, true/false
//
// No arrays, inline tables or multi-line values. Unknown keys, duplicate keys and type
// mismatches are errors that carry the line number. `echo` prints every field in a fixed
// order with shortest round-trip floats, so loading an echo and echoing again is the identity.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "qbil/error.hpp"
#include "qbil/geometry.hpp"
#include "qbil/grid.hpp"
#include "qbil/poles.hpp"

namespace qbil {

struct GridBlock {
  std::size_t nx = 216;
  std::size_t ny = 0;   // 0: square cells, rows chosen to cover the apparatus
  double dt = 0.0;      // 0: 0.2 M min(dx, dy)^2 / hbar
  double dt_max = 0.0;  // 0: no cap
  double hbar = 1.0;
  double mass = 1.0;
  std::size_t threads = 1;
};

struct PacketBlock {
  double x0 = 0.5;
  double y0 = 0.18;
  double sigma = 0.034;
  double kx = 0.0;
  double ky = -100.0;
};

struct RunBlock {
  std::size_t n_steps = 5000;
  std::size_t film_cadence = 1;
  std::size_t probe_cadence = 50;
  std::size_t snapshot_cadence = 0;  // 0: final snapshot only
  bool seal_slit1 = false;
  bool seal_slit2 = false;
};

struct AnalysisBlock {
  double window_lo = 0.1;
  double window_hi = 0.9;
  double smoothing_fwhm = 0.05;
};

struct ClassicalBlock {
  double x = 0.23;
  double y = 0.31;
  double theta = 0.7123;
  std::size_t n_bounces = 10000;
  std::size_t census_early = 100;
  double offset = 1e-9;
};

struct SpectrumBlock {
  std::size_t n = 256;  // intervals per leg of the vertex grid
  std::size_t levels = 20;
};

struct PolesBlock {
  double u0 = 10.0;
  double a_coeff = 1.0;
  std::size_t wall_order = 0;
  double radius = 1e-2;
  double mass = poles::kElectronMass;
  double hbar = poles::kHbar;
  double r0_i0 = 0.0;  // > 0 overrides the pole formula with a quoted product R0 I0
  double sweep_min = 0.0;
  double sweep_max = 0.0;
  std::size_t sweep_points = 0;
};

struct SidBlock {
  std::string kind = "gaussian";  // gaussian | sparse | random
  std::size_t n_radial = 20;
  std::size_t n_angle = 50;
  double sigma_m = 1.0;
  double m0 = 3.0;
  std::size_t n_blocks = 3;
  std::size_t block_size = 32;
  std::string weights = "uniform";  // uniform | gaussian
  double slit_separation = 0.3;
  double x_max = 5.0;
  std::size_t n_points = 40;
  double hbar = 1.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  ApparatusConfig geometry;
  GridBlock grid;
  PacketBlock packet;
  RunBlock run;
  AnalysisBlock analysis;
  ClassicalBlock classical;
  SpectrumBlock spectrum;
  PolesBlock poles;
  SidBlock sid;
  std::string source = "<memory>";
  std::set<std::string> present;  // "section.key" (top level: ".key") found in the source text

  bool has(std::string_view section, std::string_view key) const {
    return present.count(std::string(section) + "." + std::string(key)) > 0;
  }
};

namespace config_detail {

using Value = std::variant<bool, std::int64_t, double, std::string>;

struct Entry {
  Value value;
  int line;
};

[[noreturn]] inline void config_error(const std::string& source, int line, const std::string& msg) {
  fail(ErrorKind::kConfig, source + ":" + std::to_string(line) + ": " + msg);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

inline Value parse_value(std::string_view v, const std::string& source, int line) {
  if (v.empty()) config_error(source, line, "missing value");
  if (v.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < v.size() && v[i] != '"'; ++i) {
      if (v[i] == '\\' && i + 1 < v.size()) {
        ++i;
        if (v[i] != '"' && v[i] != '\\') config_error(source, line, "unsupported escape in string");
      }
      out.push_back(v[i]);
    }
    if (i >= v.size()) config_error(source, line, "unterminated string");
    if (!trim(v.substr(i + 1)).empty()) config_error(source, line, "trailing characters after string");
    return out;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  if (v == "-inf") return -std::numeric_limits<double>::infinity();
  if (v == "nan") return std::numeric_limits<double>::quiet_NaN();
  const bool is_int = v.find_first_of(".eE") == std::string_view::npos;
  std::string_view num = v.front() == '+' ? v.substr(1) : v;
  if (is_int) {
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), x);
    if (ec == std::errc() && p == num.data() + num.size()) return x;
  } else {
    double x = 0.0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), x);
    if (ec == std::errc() && p == num.data() + num.size()) return x;
  }
  config_error(source, line, "cannot parse value '" + std::string(v) + "'");
}

/// section -> key -> entry; top-level keys live in section "".
using Table = std::map<std::string, std::map<std::string, Entry>>;

inline Table parse_text(std::string_view text, const std::string& source) {
  Table t;
  t[""];
  std::string section;
  std::set<std::string> seen_sections;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    // strip comments outside strings
    bool in_str = false;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"' && (i == 0 || raw[i - 1] != '\\')) in_str = !in_str;
      if (raw[i] == '#' && !in_str) {
        cut = i;
        break;
      }
    }
    const auto line = trim(raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(source, line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!bare_key(section)) config_error(source, line_no, "invalid section name '" + section + "'");
      if (!seen_sections.insert(section).second) config_error(source, line_no, "duplicate section [" + section + "]");
      t[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error(source, line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (!bare_key(key)) config_error(source, line_no, "invalid key '" + key + "'");
    auto& sec = t[section];
    if (sec.count(key)) config_error(source, line_no, "duplicate key '" + key + "'");
    sec.emplace(key, Entry{parse_value(trim(line.substr(eq + 1)), source, line_no), line_no});
  }
  return t;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  // keep floats recognisable as floats on reload
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

/// One schema field: how to read it from a parsed value and how to print it.
struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const Entry&, const std::string&)> read;
  std::function<std::string(const ExperimentConfig&)> write;
};

template <class Get>
Field real_field(std::string section, std::string key, Get get) {
  return {section, key,
          [get, key](ExperimentConfig& c, const Entry& e, const std::string& src) {
            if (const auto* d = std::get_if<double>(&e.value)) {
              get(c) = *d;
            } else if (const auto* i = std::get_if<std::int64_t>(&e.value)) {
              get(c) = static_cast<double>(*i);
            } else {
              config_error(src, e.line, "type mismatch: '" + key + "' expects a number");
            }
          },
          [get](const ExperimentConfig& c) { return format_double(get(const_cast<ExperimentConfig&>(c))); }};
}

template <class Get>
Field count_field(std::string section, std::string key, Get get) {
  return {section, key,
          [get, key](ExperimentConfig& c, const Entry& e, const std::string& src) {
            const auto* i = std::get_if<std::int64_t>(&e.value);
            if (i == nullptr) config_error(src, e.line, "type mismatch: '" + key + "' expects an integer");
            if (*i < 0) config_error(src, e.line, "'" + key + "' must be nonnegative");
            get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(*i);
          },
          [get](const ExperimentConfig& c) { return std::to_string(get(const_cast<ExperimentConfig&>(c))); }};
}

template <class Get>
Field bool_field(std::string section, std::string key, Get get) {
  return {section, key,
          [get, key](ExperimentConfig& c, const Entry& e, const std::string& src) {
            const auto* b = std::get_if<bool>(&e.value);
            if (b == nullptr) config_error(src, e.line, "type mismatch: '" + key + "' expects true or false");
            get(c) = *b;
          },
          [get](const ExperimentConfig& c) {
            return std::string(get(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

template <class Get>
Field string_field(std::string section, std::string key, Get get, std::vector<std::string> allowed) {
  return {section, key,
          [get, key, allowed](ExperimentConfig& c, const Entry& e, const std::string& src) {
            const auto* s = std::get_if<std::string>(&e.value);
            if (s == nullptr) config_error(src, e.line, "type mismatch: '" + key + "' expects a string");
            bool ok = allowed.empty();
            for (const auto& a : allowed) ok = ok || a == *s;
            if (!ok) config_error(src, e.line, "invalid value \"" + *s + "\" for '" + key + "'");
            get(c) = *s;
          },
          [get](const ExperimentConfig& c) { return quote(get(const_cast<ExperimentConfig&>(c))); }};
}

inline const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    using C = ExperimentConfig;
    f.push_back(count_field("", "seed", [](C& c) -> std::uint64_t& { return c.seed; }));

    const std::string g = "geometry";
    f.push_back(real_field(g, "leg_length", [](C& c) -> double& { return c.geometry.leg_length; }));
    f.push_back({g, "hypotenuse",
                 [](C& c, const Entry& e, const std::string& src) {
                   const auto* s = std::get_if<std::string>(&e.value);
                   if (s == nullptr) config_error(src, e.line, "type mismatch: 'hypotenuse' expects a string");
                   if (*s == "straight") {
                     c.geometry.hypotenuse = HypotenuseKind::kStraight;
                   } else if (*s == "arc") {
                     c.geometry.hypotenuse = HypotenuseKind::kArc;
                   } else {
                     config_error(src, e.line, "invalid value \"" + *s + "\" for 'hypotenuse' (straight | arc)");
                   }
                 },
                 [](const C& c) {
                   return quote(c.geometry.hypotenuse == HypotenuseKind::kArc ? "arc" : "straight");
                 }});
    f.push_back(real_field(g, "arc_sagitta", [](C& c) -> double& { return c.geometry.arc_sagitta; }));
    f.push_back(real_field(g, "wall_height", [](C& c) -> double& { return c.geometry.wall_height; }));
    f.push_back(real_field(g, "wall_skin", [](C& c) -> double& { return c.geometry.wall_skin; }));
    f.push_back(real_field(g, "slit_separation", [](C& c) -> double& { return c.geometry.slit_separation; }));
    f.push_back(real_field(g, "slit_width", [](C& c) -> double& { return c.geometry.slit_width; }));
    f.push_back(real_field(g, "slit_center", [](C& c) -> double& { return c.geometry.slit_center; }));
    f.push_back(real_field(g, "box_depth", [](C& c) -> double& { return c.geometry.box_depth; }));
    f.push_back(real_field(g, "box_margin", [](C& c) -> double& { return c.geometry.box_margin; }));
    f.push_back(real_field(g, "film_offset", [](C& c) -> double& { return c.geometry.film_offset; }));
    f.push_back(real_field(g, "absorber_width", [](C& c) -> double& { return c.geometry.absorber_width; }));
    f.push_back(real_field(g, "absorber_strength", [](C& c) -> double& { return c.geometry.absorber_strength; }));

    const std::string gr = "grid";
    f.push_back(count_field(gr, "nx", [](C& c) -> std::size_t& { return c.grid.nx; }));
    f.push_back(count_field(gr, "ny", [](C& c) -> std::size_t& { return c.grid.ny; }));
    f.push_back(real_field(gr, "dt", [](C& c) -> double& { return c.grid.dt; }));
    f.push_back(real_field(gr, "dt_max", [](C& c) -> double& { return c.grid.dt_max; }));
    f.push_back(real_field(gr, "hbar", [](C& c) -> double& { return c.grid.hbar; }));
    f.push_back(real_field(gr, "mass", [](C& c) -> double& { return c.grid.mass; }));
    f.push_back(count_field(gr, "threads", [](C& c) -> std::size_t& { return c.grid.threads; }));

    const std::string p = "packet";
    f.push_back(real_field(p, "x0", [](C& c) -> double& { return c.packet.x0; }));
    f.push_back(real_field(p, "y0", [](C& c) -> double& { return c.packet.y0; }));
    f.push_back(real_field(p, "sigma", [](C& c) -> double& { return c.packet.sigma; }));
    f.push_back(real_field(p, "kx", [](C& c) -> double& { return c.packet.kx; }));
    f.push_back(real_field(p, "ky", [](C& c) -> double& { return c.packet.ky; }));

    const std::string r = "run";
    f.push_back(count_field(r, "n_steps", [](C& c) -> std::size_t& { return c.run.n_steps; }));
    f.push_back(count_field(r, "film_cadence", [](C& c) -> std::size_t& { return c.run.film_cadence; }));
    f.push_back(count_field(r, "probe_cadence", [](C& c) -> std::size_t& { return c.run.probe_cadence; }));
    f.push_back(count_field(r, "snapshot_cadence", [](C& c) -> std::size_t& { return c.run.snapshot_cadence; }));
    f.push_back(bool_field(r, "seal_slit1", [](C& c) -> bool& { return c.run.seal_slit1; }));
    f.push_back(bool_field(r, "seal_slit2", [](C& c) -> bool& { return c.run.seal_slit2; }));

    const std::string a = "analysis";
    f.push_back(real_field(a, "window_lo", [](C& c) -> double& { return c.analysis.window_lo; }));
    f.push_back(real_field(a, "window_hi", [](C& c) -> double& { return c.analysis.window_hi; }));
    f.push_back(real_field(a, "smoothing_fwhm", [](C& c) -> double& { return c.analysis.smoothing_fwhm; }));

    const std::string cl = "classical";
    f.push_back(real_field(cl, "x", [](C& c) -> double& { return c.classical.x; }));
    f.push_back(real_field(cl, "y", [](C& c) -> double& { return c.classical.y; }));
    f.push_back(real_field(cl, "theta", [](C& c) -> double& { return c.classical.theta; }));
    f.push_back(count_field(cl, "n_bounces", [](C& c) -> std::size_t& { return c.classical.n_bounces; }));
    f.push_back(count_field(cl, "census_early", [](C& c) -> std::size_t& { return c.classical.census_early; }));
    f.push_back(real_field(cl, "offset", [](C& c) -> double& { return c.classical.offset; }));

    const std::string sp = "spectrum";
    f.push_back(count_field(sp, "n", [](C& c) -> std::size_t& { return c.spectrum.n; }));
    f.push_back(count_field(sp, "levels", [](C& c) -> std::size_t& { return c.spectrum.levels; }));

    const std::string po = "poles";
    f.push_back(real_field(po, "u0", [](C& c) -> double& { return c.poles.u0; }));
    f.push_back(real_field(po, "a_coeff", [](C& c) -> double& { return c.poles.a_coeff; }));
    f.push_back(count_field(po, "wall_order", [](C& c) -> std::size_t& { return c.poles.wall_order; }));
    f.push_back(real_field(po, "radius", [](C& c) -> double& { return c.poles.radius; }));
    f.push_back(real_field(po, "mass", [](C& c) -> double& { return c.poles.mass; }));
    f.push_back(real_field(po, "hbar", [](C& c) -> double& { return c.poles.hbar; }));
    f.push_back(real_field(po, "r0_i0", [](C& c) -> double& { return c.poles.r0_i0; }));
    f.push_back(real_field(po, "sweep_min", [](C& c) -> double& { return c.poles.sweep_min; }));
    f.push_back(real_field(po, "sweep_max", [](C& c) -> double& { return c.poles.sweep_max; }));
    f.push_back(count_field(po, "sweep_points", [](C& c) -> std::size_t& { return c.poles.sweep_points; }));

    const std::string s = "sid";
    f.push_back(string_field(s, "kind", [](C& c) -> std::string& { return c.sid.kind; }, {"gaussian", "sparse", "random"}));
    f.push_back(count_field(s, "n_radial", [](C& c) -> std::size_t& { return c.sid.n_radial; }));
    f.push_back(count_field(s, "n_angle", [](C& c) -> std::size_t& { return c.sid.n_angle; }));
    f.push_back(real_field(s, "sigma_m", [](C& c) -> double& { return c.sid.sigma_m; }));
    f.push_back(real_field(s, "m0", [](C& c) -> double& { return c.sid.m0; }));
    f.push_back(count_field(s, "n_blocks", [](C& c) -> std::size_t& { return c.sid.n_blocks; }));
    f.push_back(count_field(s, "block_size", [](C& c) -> std::size_t& { return c.sid.block_size; }));
    f.push_back(string_field(s, "weights", [](C& c) -> std::string& { return c.sid.weights; }, {"uniform", "gaussian"}));
    f.push_back(real_field(s, "slit_separation", [](C& c) -> double& { return c.sid.slit_separation; }));
    f.push_back(real_field(s, "x_max", [](C& c) -> double& { return c.sid.x_max; }));
    f.push_back(count_field(s, "n_points", [](C& c) -> std::size_t& { return c.sid.n_points; }));
    f.push_back(real_field(s, "hbar", [](C& c) -> double& { return c.sid.hbar; }));
    return f;
  }();
  return fields;
}

}  // namespace config_detail

/// Parse configuration text. `source` names the input in error messages.
inline ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>") {
  using namespace config_detail;
  auto table = parse_text(text, source);
  ExperimentConfig c;
  c.source = source;
  for (const auto& f : schema()) {
    auto sec = table.find(f.section);
    if (sec == table.end()) continue;
    auto it = sec->second.find(f.key);
    if (it == sec->second.end()) continue;
    f.read(c, it->second, source);
    c.present.insert(f.section + "." + f.key);
    sec->second.erase(it);
  }
  for (const auto& [section, keys] : table) {
    if (keys.empty()) continue;
    const auto& [key, entry] = *keys.begin();
    const std::string where = section.empty() ? "at top level" : "in [" + section + "]";
    config_error(source, entry.line, "unknown key '" + key + "' " + where);
  }
  // sections with no known keys at all are unknown sections
  static const std::set<std::string> known = {"",    "geometry", "grid",      "packet",   "run",
                                              "analysis", "classical", "spectrum", "poles", "sid"};
  for (const auto& [section, keys] : table)
    if (!known.count(section)) config_error(source, 0, "unknown section [" + section + "]");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Canonical text for the configuration; parse_config(echo(c)) echoes identically.
inline std::string echo(const ExperimentConfig& c) {
  std::string out;
  std::string section = "\x01";
  for (const auto& f : config_detail::schema()) {
    if (f.section != section) {
      if (!f.section.empty()) out += (out.empty() ? "" : "\n") + std::string("[") + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.write(c) + "\n";
  }
  return out;
}

/// Keys that must be spelled out for a subcommand, as "section.key".
inline std::vector<std::string> required_keys(std::string_view subcommand) {
  if (subcommand == "simulate")
    return {"grid.nx", "packet.x0", "packet.y0", "packet.sigma", "packet.kx", "packet.ky", "run.n_steps"};
  if (subcommand == "sid") return {".seed", "sid.kind"};
  if (subcommand == "poles") return {"poles.radius"};
  if (subcommand == "classical") return {"classical.x", "classical.y", "classical.theta"};
  if (subcommand == "spectrum") return {"spectrum.n", "spectrum.levels"};
  return {};
}

inline void require_keys(const ExperimentConfig& c, std::string_view subcommand) {
  for (const auto& k : required_keys(subcommand)) {
    if (c.present.count(k)) continue;
    const auto dot = k.find('.');
    const std::string sec = k.substr(0, dot), key = k.substr(dot + 1);
    fail(ErrorKind::kConfig, c.source + ": missing required key '" + key + "'" +
                                 (sec.empty() ? " at top level" : " in [" + sec + "]") + " for " +
                                 std::string(subcommand));
  }
}

inline ApparatusConfig apparatus_config(const ExperimentConfig& c) {
  ApparatusConfig a = c.geometry;
  a.seal_slit1 = c.run.seal_slit1;
  a.seal_slit2 = c.run.seal_slit2;
  return a;
}

/// Grid for the apparatus with the time step filled in (default rule when dt = 0).
inline GridSpec grid_for(const ApparatusGeometry& geom, const ExperimentConfig& c) {
  require(c.grid.nx >= 3, "grid.nx must be at least 3");
  GridSpec g = c.grid.ny == 0 ? make_square_grid(geom, c.grid.nx) : make_grid(geom, c.grid.nx, c.grid.ny);
  g.hbar = c.grid.hbar;
  g.mass = c.grid.mass;
  g.threads = static_cast<unsigned>(std::max<std::size_t>(c.grid.threads, 1));
  g.dt = c.grid.dt > 0.0 ? c.grid.dt : default_time_step(g.dx, g.dy, g.hbar, g.mass);
  if (c.grid.dt_max > 0.0 && g.dt > c.grid.dt_max)
    fail(ErrorKind::kConfig, c.source + ": dt " + config_detail::format_double(g.dt) + " exceeds dt_max " +
                                 config_detail::format_double(c.grid.dt_max));
  return g;
}

/// Fill derived defaults (dt, slit centre) so the echo records the values actually used.
inline ExperimentConfig effective(ExperimentConfig c) {
  if (std::isnan(c.geometry.slit_center)) c.geometry.slit_center = 0.5 * c.geometry.leg_length;
  c.grid.dt = grid_for(build_apparatus(apparatus_config(c)), c).dt;  // also checks dt_max
  return c;
}

}  // namespace qbil
