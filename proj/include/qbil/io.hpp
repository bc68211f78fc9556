#pragma once

// File formats.
//
// Snapshot (little-endian):
//   "QBIL"  u32 version  u64 nx  u64 ny  f64 dx  f64 dy  f64 t  then nx*ny pairs (f64 re, f64 im),
//   row-major with x fastest.
// CSV: one header line, then rows of numbers printed with 17 significant digits.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qbil/error.hpp"
#include "qbil/grid.hpp"
#include "qbil/screen.hpp"
#include "qbil/wavefield.hpp"

namespace qbil::io {

inline constexpr std::array<char, 4> kSnapshotMagic = {'Q', 'B', 'I', 'L'};
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 4 + 4 + 8 + 8 + 8 + 8 + 8;

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(b, sizeof(T));
}

template <class T>
T get_le(const char* p) {
  char b[sizeof(T)];
  std::memcpy(b, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline std::string encode_snapshot(const WaveField& f) {
  std::string out;
  out.reserve(kSnapshotHeaderBytes + f.psi.size() * 16);
  out.append(kSnapshotMagic.data(), 4);
  detail::put_le<std::uint32_t>(out, kSnapshotVersion);
  detail::put_le<std::uint64_t>(out, f.nx);
  detail::put_le<std::uint64_t>(out, f.ny);
  detail::put_le<double>(out, f.dx);
  detail::put_le<double>(out, f.dy);
  detail::put_le<double>(out, f.t);
  for (const auto& v : f.psi) {
    detail::put_le<double>(out, v.real());
    detail::put_le<double>(out, v.imag());
  }
  return out;
}

/// Inverse of encode_snapshot. Grid origin is not stored; x0/y0 of the result are zero.
inline WaveField decode_snapshot(std::string_view bytes, const std::string& name = "<snapshot>") {
  auto truncated = [&](std::size_t need) {
    fail(ErrorKind::kIo, name + ": truncated snapshot at byte offset " + std::to_string(bytes.size()) +
                             " (expected at least " + std::to_string(need) + " bytes)");
  };
  if (bytes.size() < 4) truncated(4);
  if (std::memcmp(bytes.data(), kSnapshotMagic.data(), 4) != 0) fail(ErrorKind::kIo, name + ": bad magic, not a snapshot file");
  if (bytes.size() < kSnapshotHeaderBytes) truncated(kSnapshotHeaderBytes);
  const char* p = bytes.data() + 4;
  const auto version = detail::get_le<std::uint32_t>(p);
  if (version != kSnapshotVersion)
    fail(ErrorKind::kIo, name + ": unsupported snapshot version " + std::to_string(version));
  WaveField f;
  f.nx = detail::get_le<std::uint64_t>(p + 4);
  f.ny = detail::get_le<std::uint64_t>(p + 12);
  f.dx = detail::get_le<double>(p + 20);
  f.dy = detail::get_le<double>(p + 28);
  f.t = detail::get_le<double>(p + 36);
  if (f.nx == 0 || f.ny == 0 || f.nx > (std::uint64_t{1} << 24) || f.ny > (std::uint64_t{1} << 24))
    fail(ErrorKind::kIo, name + ": implausible snapshot dimensions");
  const std::size_t need = kSnapshotHeaderBytes + f.nx * f.ny * 16;
  if (bytes.size() < need) truncated(need);
  if (bytes.size() > need) fail(ErrorKind::kIo, name + ": trailing bytes after snapshot payload");
  f.psi.resize(f.nx * f.ny);
  const char* q = bytes.data() + kSnapshotHeaderBytes;
  for (std::size_t k = 0; k < f.psi.size(); ++k, q += 16)
    f.psi[k] = {detail::get_le<double>(q), detail::get_le<double>(q + 8)};
  return f;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

inline void write_snapshot(const std::filesystem::path& path, const WaveField& f) { write_file(path, encode_snapshot(f)); }

inline WaveField read_snapshot(const std::filesystem::path& path) {
  return decode_snapshot(read_file(path), path.string());
}

/// Lowercase hex SHA-256 digest.
inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::kIo, "sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

// ---------------------------------------------------------------------------------------------
// CSV

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, p);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    fail(ErrorKind::kIo, "csv has no column '" + std::string(name) + "'");
  }

  std::vector<double> values(std::string_view name) const {
    const auto c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

inline std::string to_csv(const CsvTable& t) {
  std::string out;
  for (std::size_t c = 0; c < t.header.size(); ++c) out += (c ? "," : "") + t.header[c];
  out += "\n";
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + format_number(r[c]);
    out += "\n";
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text, const std::string& name = "<csv>") {
  CsvTable t;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t b = 0;
    while (true) {
      const auto e = line.find(',', b);
      cells.push_back(line.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
      if (e == std::string_view::npos) break;
      b = e + 1;
    }
    if (t.header.empty()) {
      for (auto c : cells) t.header.emplace_back(c);
      continue;
    }
    if (cells.size() != t.header.size())
      fail(ErrorKind::kIo, name + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                               " columns, got " + std::to_string(cells.size()));
    std::vector<double> row;
    for (auto c : cells) {
      double v = 0.0;
      if (c == "inf") {
        v = std::numeric_limits<double>::infinity();
      } else if (c == "-inf") {
        v = -std::numeric_limits<double>::infinity();
      } else if (c == "nan") {
        v = std::numeric_limits<double>::quiet_NaN();
      } else {
        auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
        if (ec != std::errc() || p != c.data() + c.size())
          fail(ErrorKind::kIo, name + ":" + std::to_string(line_no) + ": not a number '" + std::string(c) + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) fail(ErrorKind::kIo, name + ": empty csv");
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path), path.string()); }

/// Columns x, p and, when decomposed, p1, p2, p_int.
inline CsvTable screen_table(const ScreenRecord& r) {
  CsvTable t;
  t.header = {"x", "p"};
  const bool dec = r.p1 && r.p2 && r.p_int;
  if (dec) t.header.insert(t.header.end(), {"p1", "p2", "p_int"});
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::vector<double> row = {r.x[i], r.p[i]};
    if (dec) row.insert(row.end(), {(*r.p1)[i], (*r.p2)[i], (*r.p_int)[i]});
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Reads x and p back; accumulation window bounds come from the caller (they live in the summary).
inline ScreenRecord screen_from_table(const CsvTable& t, double t_begin, double t_end) {
  ScreenRecord r;
  r.x = t.values("x");
  r.p = t.values("p");
  r.t_begin = t_begin;
  r.t_end = t_end;
  return r;
}

/// Two-column "quantity,value" summary. Values are numbers or bare words.
class Summary {
 public:
  void add(std::string key, double v) { rows_.emplace_back(std::move(key), format_number(v)); }
  void add(std::string key, std::string v) { rows_.emplace_back(std::move(key), std::move(v)); }
  void add(std::string key, const char* v) { add(std::move(key), std::string(v)); }
  void add(std::string key, bool v) { add(std::move(key), std::string(v ? "true" : "false")); }

  std::string text() const {
    std::string out = "quantity,value\n";
    for (const auto& [k, v] : rows_) out += k + "," + v + "\n";
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

/// key -> value map from a summary file.
inline std::vector<std::pair<std::string, std::string>> read_summary(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    const auto c = line.find(',');
    if (c == std::string::npos) continue;
    out.emplace_back(line.substr(0, c), line.substr(c + 1));
  }
  return out;
}

inline double summary_number(const std::vector<std::pair<std::string, std::string>>& s, std::string_view key) {
  for (const auto& [k, v] : s) {
    if (k != key) continue;
    if (v == "inf") return std::numeric_limits<double>::infinity();
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec == std::errc() && p == v.data() + v.size()) return x;
    fail(ErrorKind::kIo, "summary value for '" + std::string(key) + "' is not a number");
  }
  fail(ErrorKind::kIo, "summary has no entry '" + std::string(key) + "'");
}

}  // namespace qbil::io
