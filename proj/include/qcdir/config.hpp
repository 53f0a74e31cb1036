#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qcdir/beltrami.hpp"
#include "qcdir/criteria.hpp"
#include "qcdir/io.hpp"
#include "qcdir/orlicz.hpp"
#include "qcdir/poisson.hpp"
#include "qcdir/presets.hpp"

namespace qcdir::config {

using io::json;

inline constexpr int kSchema = 1;

/// A config was rejected. `line()` is 1-based in the source text, 0 if unknown.
class ConfigError : public InvalidInput {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : InvalidInput((line ? "line " + std::to_string(line) + ": " : std::string()) + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parsed, validated configuration. `canonical` has every default filled in
/// and is what export_config writes back.
struct Config {
  std::string problem;  // beltrami | poisson | audit | qc-map
  json canonical;
  std::string source;
  std::filesystem::path base_dir = ".";
};

namespace detail {

inline std::size_t line_at(const std::string& text, std::size_t pos) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(pos, text.size()), '\n'));
}

/// Line of the last key in `path`, found by searching each quoted key after
/// the previous one. 0 when absent.
inline std::size_t line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& k : path) {
    const auto p = text.find("\"" + k + "\"", pos);
    if (p == std::string::npos) return 0;
    pos = p + 1;
  }
  return path.empty() ? 0 : line_at(text, pos);
}

struct Ctx {
  const std::string& text;

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string name;
    for (const auto& p : path) name += (name.empty() ? "" : ".") + p;
    throw ConfigError(line_of(text, path), (name.empty() ? "" : name + ": ") + msg);
  }

  void keys(const json& j, const std::vector<std::string>& path, const std::set<std::string>& allowed) const {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!allowed.count(it.key())) {
        auto p = path;
        p.push_back(it.key());
        fail(p, "unknown key '" + it.key() + "'");
      }
  }

  double number(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  cplx point(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
      fail(path, "expected a point [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
  }

  std::vector<double> numbers(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> v;
    for (const auto& x : j) {
      if (!x.is_number()) fail(path, "expected an array of numbers");
      v.push_back(x.get<double>());
    }
    return v;
  }

  std::string string(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }
};

template <class Fn>
auto guarded(const Ctx& c, const std::vector<std::string>& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    c.fail(path, e.what());
  } catch (const json::exception& e) {
    c.fail(path, e.what());
  }
}

inline json get_or(const json& j, const char* key, json fallback) {
  return j.contains(key) ? j.at(key) : std::move(fallback);
}

inline json canonical_grid(const Ctx& c, const json& j) {
  c.keys(j, {"grid"}, {"n", "L", "center"});
  json g = {{"n", get_or(j, "n", 256)}, {"L", get_or(j, "L", 2.0)}, {"center", get_or(j, "center", {0.0, 0.0})}};
  if (!g["n"].is_number_integer()) c.fail({"grid", "n"}, "expected an integer");
  c.number(g["L"], {"grid", "L"});
  c.point(g["center"], {"grid", "center"});
  return g;
}

inline json canonical_domain(const Ctx& c, const json& j) {
  c.keys(j, {"domain"}, {"type", "center", "radius", "a", "b", "vertices", "samples"});
  const std::string type = c.string(get_or(j, "type", "disk"), {"domain", "type"});
  json d = {{"type", type}, {"samples", get_or(j, "samples", 512)}};
  if (!d["samples"].is_number_integer()) c.fail({"domain", "samples"}, "expected an integer");
  if (type == "disk") {
    d["center"] = get_or(j, "center", {0.0, 0.0});
    d["radius"] = get_or(j, "radius", 1.0);
  } else if (type == "ellipse") {
    d["center"] = get_or(j, "center", {0.0, 0.0});
    d["a"] = get_or(j, "a", 1.0);
    d["b"] = get_or(j, "b", 0.5);
  } else if (type == "polygon") {
    if (!j.contains("vertices")) c.fail({"domain"}, "polygon needs 'vertices'");
    d["vertices"] = j.at("vertices");
  } else {
    c.fail({"domain", "type"}, "unknown domain type '" + type + "' (disk, ellipse, polygon)");
  }
  return d;
}

/// {"preset": name, "params": [...]} or {"csv": path}.
inline json canonical_field(const Ctx& c, const json& j, const std::string& key, const char* fallback) {
  c.keys(j, {key}, {"preset", "params", "csv"});
  if (j.contains("csv")) {
    if (j.contains("preset")) c.fail({key}, "give either 'preset' or 'csv', not both");
    return {{"csv", c.string(j.at("csv"), {key, "csv"})}};
  }
  json f = {{"preset", get_or(j, "preset", fallback)}, {"params", get_or(j, "params", json::array())}};
  c.string(f["preset"], {key, "preset"});
  c.numbers(f["params"], {key, "params"});
  return f;
}

inline json canonical_phi(const Ctx& c, const json& j) {
  c.keys(j, {"phi"}, {"preset", "params"});
  json f = {{"preset", get_or(j, "preset", "cos")}, {"params", get_or(j, "params", json::array())}};
  c.string(f["preset"], {"phi", "preset"});
  c.numbers(f["params"], {"phi", "params"});
  return f;
}

inline json canonical_tolerances(const Ctx& c, const json& j, const std::vector<std::string>& which) {
  static const std::map<std::string, double> defaults = {
      {"solver", 1e-6}, {"residual", 1e-2}, {"boundary", 2e-2}, {"ladder", 1e-3}};
  c.keys(j, {"tolerances"}, std::set<std::string>(which.begin(), which.end()));
  json t = json::object();
  for (const auto& k : which) {
    t[k] = get_or(j, k.c_str(), defaults.at(k));
    if (!(c.number(t[k], {"tolerances", k}) > 0)) c.fail({"tolerances", k}, "must be positive");
  }
  return t;
}

inline json canonical_caps(const Ctx& c, const json& j) {
  json caps = j.is_null() ? json(default_caps()) : j;
  const auto v = c.numbers(caps, {"ladder_caps"});
  if (v.empty()) c.fail({"ladder_caps"}, "needs at least one cap");
  for (double x : v)
    if (!(x >= 1)) c.fail({"ladder_caps"}, "caps are dilatation bounds and must be >= 1");
  return caps;
}

inline json canonical_audit_params(const Ctx& c, const json& j) {
  c.keys(j, {"params"}, {"eps0", "levels", "angular_nodes", "alpha", "Delta", "orlicz", "orlicz_param", "psi"});
  json p = {{"eps0", get_or(j, "eps0", nullptr)},
            {"levels", get_or(j, "levels", 600)},
            {"angular_nodes", get_or(j, "angular_nodes", 256)},
            {"alpha", get_or(j, "alpha", 1.0)},
            {"Delta", get_or(j, "Delta", 1.0)},
            {"orlicz", get_or(j, "orlicz", "exp")},
            {"orlicz_param", get_or(j, "orlicz_param", 1.0)},
            {"psi", get_or(j, "psi", "1/t")}};
  if (!p["eps0"].is_null()) c.number(p["eps0"], {"params", "eps0"});
  for (const char* k : {"levels", "angular_nodes"})
    if (!p[k].is_number_integer() || p[k].get<int>() < 8) c.fail({"params", k}, "expected an integer >= 8");
  for (const char* k : {"alpha", "Delta", "orlicz_param"}) c.number(p[k], {"params", k});
  const std::string psi = c.string(p["psi"], {"params", "psi"});
  if (psi != "1/t" && psi != "1/(t log(e/t))") c.fail({"params", "psi"}, "psi is '1/t' or '1/(t log(e/t))'");
  c.string(p["orlicz"], {"params", "orlicz"});
  return p;
}

inline const std::vector<std::string>& all_criteria() {
  static const std::vector<std::string> v = {"fmo", "mean", "cz", "lehto", "orlicz", "exp", "psi"};
  return v;
}

inline json canonicalize(const Ctx& c, const json& in) {
  if (!in.is_object()) throw ConfigError(1, "config must be an object");
  if (!in.contains("schema")) throw ConfigError(1, "missing 'schema' (expected " + std::to_string(kSchema) + ")");
  if (!in["schema"].is_number_integer() || in["schema"].get<int>() != kSchema)
    c.fail({"schema"}, "unsupported schema version (expected " + std::to_string(kSchema) + ")");
  const std::string problem = c.string(get_or(in, "problem", "beltrami"), {"problem"});
  std::set<std::string> allowed = {"schema", "problem", "grid", "seed", "domain"};
  json out = {{"schema", kSchema}, {"problem", problem}};
  out["grid"] = canonical_grid(c, get_or(in, "grid", json::object()));
  const json seed = get_or(in, "seed", 1);
  if (!seed.is_number_integer() || seed.get<long long>() < 0) c.fail({"seed"}, "expected a non-negative integer");
  out["seed"] = seed.get<std::uint64_t>();
  out["domain"] = canonical_domain(c, get_or(in, "domain", json::object()));
  auto field = [&](const char* key, const char* fallback) {
    allowed.insert(key);
    out[key] = canonical_field(c, get_or(in, key, json::object()), key, fallback);
  };
  auto tolerances = [&](std::vector<std::string> which) {
    allowed.insert("tolerances");
    out["tolerances"] = canonical_tolerances(c, get_or(in, "tolerances", json::object()), which);
  };
  auto ladder = [&] {
    allowed.insert({"degenerate", "ladder_caps"});
    out["degenerate"] = get_or(in, "degenerate", false);
    if (!out["degenerate"].is_boolean()) c.fail({"degenerate"}, "expected true or false");
    out["ladder_caps"] = canonical_caps(c, get_or(in, "ladder_caps", nullptr));
  };
  if (problem == "beltrami") {
    field("mu", "zero");
    field("sigma", "zero");
    allowed.insert({"phi", "anchor"});
    out["phi"] = canonical_phi(c, get_or(in, "phi", json::object()));
    out["anchor"] = get_or(in, "anchor", nullptr);
    if (!out["anchor"].is_null()) c.point(out["anchor"], {"anchor"});
    ladder();
    tolerances({"solver", "residual", "boundary", "ladder"});
  } else if (problem == "poisson") {
    allowed.insert({"A", "phi", "basis_size"});
    const json a = get_or(in, "A", json::object());
    c.keys(a, {"A"}, {"preset", "mu", "csv"});
    if (a.contains("csv")) {
      const json q = a.at("csv");
      if (!q.is_array() || q.size() != 4) c.fail({"A", "csv"}, "expected four paths [a11, a12, a21, a22]");
      for (const auto& s : q) c.string(s, {"A", "csv"});
      out["A"] = {{"csv", q}};
    } else {
      const std::string p = c.string(get_or(a, "preset", "identity"), {"A", "preset"});
      if (p == "identity") {
        out["A"] = {{"preset", p}};
      } else if (p == "from-mu") {
        out["A"] = {{"preset", p}, {"mu", canonical_field(c, get_or(a, "mu", json::object()), "mu", "zero")}};
      } else {
        c.fail({"A", "preset"}, "unknown A preset '" + p + "' (identity, from-mu)");
      }
    }
    field("g", "zero");
    out["phi"] = canonical_phi(c, get_or(in, "phi", json::object()));
    out["basis_size"] = get_or(in, "basis_size", 25);
    if (!out["basis_size"].is_number_integer()) c.fail({"basis_size"}, "expected an integer");
    tolerances({"solver", "residual"});
  } else if (problem == "audit") {
    field("mu", "zero");
    allowed.insert({"points", "stride", "criteria", "params", "dominant"});
    out["points"] = get_or(in, "points", "boundary");
    if (out["points"].is_string()) {
      if (out["points"] != "boundary") c.fail({"points"}, "expected \"boundary\" or a list of points");
    } else if (out["points"].is_array()) {
      for (const auto& p : out["points"]) c.point(p, {"points"});
    } else {
      c.fail({"points"}, "expected \"boundary\" or a list of points");
    }
    out["stride"] = get_or(in, "stride", 64);
    if (!out["stride"].is_number_integer() || out["stride"].get<int>() < 1) c.fail({"stride"}, "expected an integer >= 1");
    out["criteria"] = get_or(in, "criteria", all_criteria());
    if (!out["criteria"].is_array()) c.fail({"criteria"}, "expected a list of criterion names");
    for (const auto& s : out["criteria"]) {
      const std::string n = c.string(s, {"criteria"});
      if (std::find(all_criteria().begin(), all_criteria().end(), n) == all_criteria().end())
        c.fail({"criteria"}, "unknown criterion '" + n + "'");
    }
    out["params"] = canonical_audit_params(c, get_or(in, "params", json::object()));
    out["dominant"] = get_or(in, "dominant", nullptr);
    if (!out["dominant"].is_null()) {
      c.keys(out["dominant"], {"dominant"}, {"preset", "param"});
      json d = {{"preset", c.string(get_or(out["dominant"], "preset", "log"), {"dominant", "preset"})},
                {"param", c.number(get_or(out["dominant"], "param", 0.0), {"dominant", "param"})}};
      out["dominant"] = d;
    }
  } else if (problem == "qc-map") {
    field("mu", "zero");
    ladder();
    tolerances({"solver", "ladder"});
  } else {
    c.fail({"problem"}, "unknown problem '" + problem + "' (beltrami, poisson, audit, qc-map)");
  }
  c.keys(in, {}, allowed);
  return out;
}

}  // namespace detail

inline Grid grid_of(const Config& cfg) {
  const json& g = cfg.canonical.at("grid");
  return Grid(cplx(g["center"][0].get<double>(), g["center"][1].get<double>()), g["L"].get<double>(),
              g["n"].get<int>());
}

inline DomainSpec domain_of(const Config& cfg) {
  const json& d = cfg.canonical.at("domain");
  const auto m = d["samples"].get<std::size_t>();
  const std::string type = d["type"];
  auto pt = [](const json& p) { return cplx(p[0].get<double>(), p[1].get<double>()); };
  if (type == "disk") return disk_domain(pt(d["center"]), d["radius"].get<double>(), m);
  if (type == "ellipse") return ellipse_domain(pt(d["center"]), d["a"].get<double>(), d["b"].get<double>(), m);
  std::vector<cplx> v;
  for (const auto& p : d["vertices"]) v.push_back(pt(p));
  return polygon_domain(v, m);
}

namespace detail {

inline std::string resolve(const Config& cfg, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (cfg.base_dir / path).string();
}

template <class T>
Field<T> csv_on(const Config& cfg, const std::string& path, const Grid& g) {
  Field<T> f = io::import_csv<T>(resolve(cfg, path));
  if (!(f.grid == g)) throw InvalidInput("CSV field '" + path + "' is on a different grid than the config");
  return f;
}

inline void require_elliptic(const ComplexField& mu) {
  for (const cplx& v : mu.values)
    if (!(std::abs(v) < 1.0)) {
      std::ostringstream os;
      os << "ellipticity bound |mu| < 1 violated (|mu| = " << std::abs(v) << ")";
      throw InvalidInput(os.str());
    }
}

inline ComplexField mu_of(const Config& cfg, const json& spec, const Grid& g) {
  ComplexField mu;
  if (spec.contains("csv")) {
    mu = csv_on<cplx>(cfg, spec["csv"], g);
  } else {
    mu = presets::mu_preset(spec["preset"], g, spec["params"].get<std::vector<double>>());
  }
  require_elliptic(mu);
  return mu;
}

/// zero; disk-indicator {radius, cx, cy, value}; gaussian {cx, cy, width,
/// amplitude}, cut to zero below 1e-12 of its peak.
inline std::function<double(cplx)> source_preset(const std::string& name, const std::vector<double>& p) {
  auto at = [&](std::size_t i, double d) { return i < p.size() ? p[i] : d; };
  if (name == "zero") return [](cplx) { return 0.0; };
  if (name == "disk-indicator") {
    const double r = at(0, 0.5), v = at(3, 1.0);
    const cplx c(at(1, 0.0), at(2, 0.0));
    if (!(r > 0)) throw InvalidInput("disk-indicator radius must be positive");
    return [=](cplx z) { return std::abs(z - c) <= r ? v : 0.0; };
  }
  if (name == "gaussian") {
    const cplx c(at(0, 0.0), at(1, 0.0));
    const double w = at(2, 0.1), a = at(3, 1.0);
    if (!(w > 0)) throw InvalidInput("gaussian width must be positive");
    return [=](cplx z) {
      const double e = std::norm(z - c) / (w * w);
      return e > 27.64 ? 0.0 : a * std::exp(-e);
    };
  }
  throw InvalidInput("unknown source preset '" + name + "' (zero, disk-indicator, gaussian)");
}

inline BoundaryData phi_of(const json& spec, const DomainSpec& d) {
  return presets::phi_preset(spec["preset"], d, spec["params"].get<std::vector<double>>());
}

}  // namespace detail

/// Schema-checked parse of config text; every problem object is built once so
/// invariant violations surface here with the offending line.
inline Config validate_config(Config cfg);

inline Config parse_config_text(const std::string& text, std::filesystem::path base_dir = ".") {
  Config cfg;
  cfg.source = text;
  cfg.base_dir = std::move(base_dir);
  json in;
  try {
    in = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(detail::line_at(text, e.byte ? e.byte - 1 : 0), std::string("malformed config: ") + e.what());
  }
  detail::Ctx c{text};
  cfg.canonical = detail::canonicalize(c, in);
  cfg.problem = cfg.canonical["problem"];
  return validate_config(std::move(cfg));
}

inline Config parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::filesystem::path(path).parent_path());
}

/// Canonical text; parse_config_text(export_config(c)) reproduces c.canonical.
inline std::string export_config(const Config& cfg) { return cfg.canonical.dump(2) + "\n"; }

inline BeltramiProblem build_beltrami(const Config& cfg) {
  const detail::Ctx c{cfg.source};
  const json& j = cfg.canonical;
  const Grid g = detail::guarded(c, {"grid"}, [&] { return grid_of(cfg); });
  BeltramiProblem p;
  p.domain = detail::guarded(c, {"domain"}, [&] { return domain_of(cfg); });
  p.mu = detail::guarded(c, {"mu"}, [&] { return detail::mu_of(cfg, j["mu"], g); });
  p.sigma = detail::guarded(c, {"sigma"}, [&] {
    if (j["sigma"].contains("csv")) return detail::csv_on<cplx>(cfg, j["sigma"]["csv"], g);
    const auto fn = detail::source_preset(j["sigma"]["preset"], j["sigma"]["params"].get<std::vector<double>>());
    return sample_complex(g, [&](cplx z) { return cplx(fn(z)); });
  });
  p.phi = detail::guarded(c, {"phi"}, [&] { return detail::phi_of(j["phi"], p.domain); });
  p.anchor = j["anchor"].is_null() ? p.domain.centroid()
                                   : cplx(j["anchor"][0].get<double>(), j["anchor"][1].get<double>());
  p.degenerate = j["degenerate"];
  p.ladder_caps = j["ladder_caps"].get<std::vector<double>>();
  p.solver_tol = j["tolerances"]["solver"];
  p.residual_tol = j["tolerances"]["residual"];
  p.boundary_tol = j["tolerances"]["boundary"];
  p.ladder_tol = j["tolerances"]["ladder"];
  p.seed = j["seed"];
  try {
    validate(p);
  } catch (const InvalidInput& e) {
    const std::string m = e.what();
    const char* key = m.find("sigma") != std::string::npos    ? "sigma"
                      : m.find("anchor") != std::string::npos ? "anchor"
                                                              : "domain";
    c.fail({key}, m);
  }
  return p;
}

inline PoissonProblem build_poisson(const Config& cfg) {
  const detail::Ctx c{cfg.source};
  const json& j = cfg.canonical;
  const Grid g = detail::guarded(c, {"grid"}, [&] { return grid_of(cfg); });
  PoissonProblem p;
  p.domain = detail::guarded(c, {"domain"}, [&] { return domain_of(cfg); });
  p.A = detail::guarded(c, {"A"}, [&] {
    const json& a = j["A"];
    if (a.contains("csv")) {
      MatrixField A(g);
      RealField* e[4] = {&A.a11, &A.a12, &A.a21, &A.a22};
      for (int k = 0; k < 4; ++k) *e[k] = detail::csv_on<double>(cfg, a["csv"][k], g);
      return A;
    }
    if (a["preset"] == "identity") return MatrixField(g);
    return A_from_mu(detail::mu_of(cfg, a["mu"], g));
  });
  p.g = detail::guarded(c, {"g"}, [&] {
    if (j["g"].contains("csv")) return detail::csv_on<double>(cfg, j["g"]["csv"], g);
    return sample_real(g, detail::source_preset(j["g"]["preset"], j["g"]["params"].get<std::vector<double>>()));
  });
  p.phi = detail::guarded(c, {"phi"}, [&] { return detail::phi_of(j["phi"], p.domain); });
  p.basis_size = j["basis_size"];
  detail::guarded(c, {"basis_size"}, [&] { return bump_basis(p.domain, p.basis_size).size(); });
  p.solver_tol = j["tolerances"]["solver"];
  p.residual_tol = j["tolerances"]["residual"];
  p.seed = j["seed"];
  try {
    validate(p);
  } catch (const InvalidInput& e) {
    const std::string m = e.what();
    const char* key = m.find("g must") != std::string::npos ? "g"
                      : m.find("domain") != std::string::npos ? "domain"
                                                              : "A";
    c.fail({key}, m);
  }
  return p;
}

/// Criteria audit at a list of base points.
struct AuditRequest {
  DomainSpec domain;
  std::function<cplx(cplx, cplx)> mu;  // mu(z0, d) at z0 + d
  std::vector<cplx> points;
  std::vector<std::string> criteria;
  std::optional<double> eps0;
  LadderOptions ladder;
  double alpha = 1.0;
  double Delta = 1.0;
  OrliczFunction phi;
  PsiFamily psi;
  std::optional<OffsetFunction> dominant;
  std::string dominant_name;
};

inline AuditRequest build_audit(const Config& cfg) {
  const detail::Ctx c{cfg.source};
  const json& j = cfg.canonical;
  AuditRequest r;
  r.domain = detail::guarded(c, {"domain"}, [&] { return domain_of(cfg); });
  r.mu = detail::guarded(c, {"mu"}, [&]() -> std::function<cplx(cplx, cplx)> {
    if (j["mu"].contains("csv")) {
      const Grid g = grid_of(cfg);
      auto f = std::make_shared<ComplexField>(detail::mu_of(cfg, j["mu"], g));
      return [f](cplx z0, cplx d) { return f->grid.contains(z0 + d) ? interpolate_value(*f, z0 + d) : cplx(0.0); };
    }
    return presets::mu_function(j["mu"]["preset"], j["mu"]["params"].get<std::vector<double>>()).at;
  });
  if (j["points"].is_string()) {
    const std::size_t stride = j["stride"];
    for (std::size_t k = 0; k < r.domain.size(); k += stride) r.points.push_back(r.domain[k]);
  } else {
    for (const auto& p : j["points"]) r.points.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  r.criteria = j["criteria"].get<std::vector<std::string>>();
  const json& p = j["params"];
  if (!p["eps0"].is_null()) {
    r.eps0 = p["eps0"].get<double>();
    if (!(*r.eps0 > 0 && *r.eps0 < 1)) c.fail({"params", "eps0"}, "eps0 must lie in (0, 1)");
  }
  r.ladder.levels = p["levels"];
  r.ladder.angular_nodes = p["angular_nodes"];
  r.alpha = p["alpha"];
  r.Delta = p["Delta"];
  if (!(r.alpha > 0)) c.fail({"params", "alpha"}, "alpha must be positive");
  r.phi = detail::guarded(c, {"params", "orlicz"},
                          [&] { return orlicz_preset(p["orlicz"], p["orlicz_param"].get<double>()); });
  r.psi = p["psi"] == "1/t" ? psi_inverse() : psi_inverse_log();
  if (!j["dominant"].is_null()) {
    r.dominant_name = j["dominant"]["preset"];
    r.dominant = detail::guarded(c, {"dominant"},
                                 [&] { return q_preset(r.dominant_name, j["dominant"]["param"].get<double>()); });
  }
  return r;
}

/// Plane map for a coefficient, optionally through the truncation ladder.
struct QcMapRequest {
  ComplexField mu;
  DomainSpec domain;  // probe compact for the ladder
  bool degenerate = false;
  std::vector<double> ladder_caps;
  double solver_tol = 1e-6;
  double ladder_tol = 1e-3;
  std::uint64_t seed = 1;
};

inline QcMapRequest build_qc_map(const Config& cfg) {
  const detail::Ctx c{cfg.source};
  const json& j = cfg.canonical;
  const Grid g = detail::guarded(c, {"grid"}, [&] { return grid_of(cfg); });
  QcMapRequest r;
  r.domain = detail::guarded(c, {"domain"}, [&] { return domain_of(cfg); });
  r.mu = detail::guarded(c, {"mu"}, [&] { return detail::mu_of(cfg, j["mu"], g); });
  r.degenerate = j["degenerate"];
  r.ladder_caps = j["ladder_caps"].get<std::vector<double>>();
  r.solver_tol = j["tolerances"]["solver"];
  r.ladder_tol = j["tolerances"]["ladder"];
  r.seed = j["seed"];
  return r;
}

inline Config validate_config(Config cfg) {
  if (cfg.problem == "beltrami")
    build_beltrami(cfg);
  else if (cfg.problem == "poisson")
    build_poisson(cfg);
  else if (cfg.problem == "audit")
    build_audit(cfg);
  else
    build_qc_map(cfg);
  return cfg;
}

/// Command-line overrides; the result is re-validated.
inline Config with_overrides(Config cfg, std::optional<int> grid_n, std::optional<std::uint64_t> seed) {
  if (grid_n) cfg.canonical["grid"]["n"] = *grid_n;
  if (seed) cfg.canonical["seed"] = *seed;
  return validate_config(std::move(cfg));
}

}  // namespace qcdir::config
