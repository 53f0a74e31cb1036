#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "qcdir/error.hpp"
#include "qcdir/grid.hpp"

namespace qcdir::io {

using json = nlohmann::ordered_json;

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw IoError("not a number: '" + std::string(s) + "'");
  return v;
}

inline json grid_json(const Grid& g) {
  return {{"center", {g.center().real(), g.center().imag()}}, {"half_width", g.half_width()}, {"n", g.n()}};
}

inline Grid grid_from_json(const json& j) {
  return Grid(cplx(j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()),
              j.at("half_width").get<double>(), j.at("n").get<int>());
}

inline std::string sidecar_path(const std::string& csv) { return csv + ".json"; }

/// What export_csv wrote.
struct CsvInfo {
  std::size_t rows = 0;
  std::size_t masked = 0;
};

/// Header x,y,val or x,y,re,im; one row per active node, x fastest. The
/// sidecar <path>.json records the grid and the row counts.
template <class T>
CsvInfo export_csv(const Field<T>& f, const std::string& path) {
  constexpr bool complex = std::is_same_v<T, cplx>;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << (complex ? "x,y,re,im\n" : "x,y,val\n");
  CsvInfo info;
  const Grid& g = f.grid;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      if (!f.active(i, j)) {
        ++info.masked;
        continue;
      }
      out << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ',';
      if constexpr (complex)
        out << format_double(f(i, j).real()) << ',' << format_double(f(i, j).imag()) << '\n';
      else
        out << format_double(f(i, j)) << '\n';
      ++info.rows;
    }
  if (!out) throw IoError("write to '" + path + "' failed");
  json side = {{"format", complex ? "x,y,re,im" : "x,y,val"},
               {"grid", grid_json(g)},
               {"rows", info.rows},
               {"masked", info.masked}};
  std::ofstream s(sidecar_path(path));
  if (!s) throw IoError("cannot open '" + sidecar_path(path) + "' for writing");
  s << side.dump(2) << '\n';
  return info;
}

/// Reads a field written by export_csv. Nodes without a row are masked out.
template <class T>
Field<T> import_csv(const std::string& path) {
  constexpr bool complex = std::is_same_v<T, cplx>;
  std::ifstream sf(sidecar_path(path));
  if (!sf) throw IoError("missing sidecar '" + sidecar_path(path) + "'");
  json side;
  try {
    side = json::parse(sf);
  } catch (const json::exception& e) {
    throw IoError("bad sidecar '" + sidecar_path(path) + "': " + e.what());
  }
  const Grid g = grid_from_json(side.at("grid"));
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string header = complex ? "x,y,re,im" : "x,y,val";
  if (line != header) throw IoError(path + ": expected header '" + header + "', got '" + line + "'");
  Field<T> f(g);
  std::vector<std::uint8_t> seen(g.size(), 0);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    for (std::size_t p; (p = rest.find(',')) != std::string_view::npos; rest.remove_prefix(p + 1))
      cols.push_back(rest.substr(0, p));
    cols.push_back(rest);
    if (cols.size() != (complex ? 4u : 3u))
      throw IoError(path + ":" + std::to_string(lineno) + ": wrong number of columns");
    double x, y;
    try {
      x = parse_double(cols[0]);
      y = parse_double(cols[1]);
    } catch (const IoError& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const long i = std::lround(g.fi(cplx(x, y))), j = std::lround(g.fj(cplx(x, y)));
    if (i < 0 || j < 0 || i >= g.n() || j >= g.n() ||
        std::abs(g.node(int(i), int(j)) - cplx(x, y)) > 1e-6 * g.spacing())
      throw IoError(path + ":" + std::to_string(lineno) + ": point is not a grid node");
    const std::size_t k = g.index(int(i), int(j));
    try {
      if constexpr (complex)
        f.values[k] = cplx(parse_double(cols[2]), parse_double(cols[3]));
      else
        f.values[k] = parse_double(cols[2]);
    } catch (const IoError& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    seen[k] = 1;
  }
  if (std::count(seen.begin(), seen.end(), std::uint8_t{1}) != static_cast<long>(g.size())) f.mask = seen;
  return f;
}

/// Linear gray mapping used by export_pgm: gray = 127.5 (1 + v/scale).
struct HeatmapScale {
  double scale = 0.0;  // max |v| over active nodes
  double lo = 0.0, hi = 0.0;
};

/// 8-bit binary portable graymap, top row = largest y. Symmetric scale about
/// zero, active values in 1..255; masked nodes are 0.
inline HeatmapScale export_pgm(const RealField& f, const std::string& path) {
  const Grid& g = f.grid;
  HeatmapScale sc;
  bool first = true;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!f.active(k)) continue;
    const double v = f.values[k];
    sc.scale = std::max(sc.scale, std::abs(v));
    sc.lo = first ? v : std::min(sc.lo, v);
    sc.hi = first ? v : std::max(sc.hi, v);
    first = false;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "P5\n" << g.n() << ' ' << g.n() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.n()));
  for (int j = g.n() - 1; j >= 0; --j) {
    for (int i = 0; i < g.n(); ++i) {
      if (!f.active(i, j)) {
        row[i] = 0;
        continue;
      }
      const double t = sc.scale > 0 ? f(i, j) / sc.scale : 0.0;
      row[i] = static_cast<unsigned char>(std::clamp(std::lround(127.5 * (1.0 + t)), 1L, 255L));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write to '" + path + "' failed");
  return sc;
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return os.str();
}

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kManifestSchema = 1;

/// Structured run record: versions, parameters, residuals, verdicts and the
/// SHA-256 of every file written. Files are keyed by their name relative to dir.
class Manifest {
 public:
  explicit Manifest(std::string dir, std::string command) : dir_(std::move(dir)) {
    j_["schema"] = kManifestSchema;
    j_["version"] = kVersion;
    j_["command"] = std::move(command);
    j_["files"] = json::object();
  }

  json& operator[](const std::string& key) { return j_[key]; }
  const json& data() const { return j_; }
  std::string path(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

  template <class T>
  void field(const std::string& name, const Field<T>& f, bool heatmap = true) {
    const std::string csv = name + ".csv";
    const CsvInfo info = export_csv(f, path(csv));
    add_file(csv, {{"rows", info.rows}, {"masked", info.masked}});
    add_file(csv + ".json");
    if (!heatmap) return;
    RealField shown;
    if constexpr (std::is_same_v<T, cplx>)
      shown = real_part(f);
    else
      shown = f;
    const std::string pgm = name + ".pgm";
    const HeatmapScale sc = export_pgm(shown, path(pgm));
    add_file(pgm, {{"component", std::is_same_v<T, cplx> ? "re" : "val"},
                   {"scale", sc.scale},
                   {"min", sc.lo},
                   {"max", sc.hi},
                   {"mapping", "gray = 127.5 (1 + v/scale)"}});
  }

  void add_file(const std::string& name, json extra = json::object()) {
    extra["sha256"] = sha256_file(path(name));
    j_["files"][name] = std::move(extra);
  }

  void write(const std::string& name = "manifest.json") const {
    std::ofstream out(path(name));
    if (!out) throw IoError("cannot write manifest '" + path(name) + "'");
    out << j_.dump(2) << '\n';
  }

 private:
  std::string dir_;
  json j_;
};

}  // namespace qcdir::io
