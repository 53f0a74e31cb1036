#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qcdir/beltrami.hpp"
#include "qcdir/config.hpp"
#include "qcdir/criteria.hpp"
#include "qcdir/io.hpp"
#include "qcdir/poisson.hpp"
#include "qcdir/qc_solver.hpp"

namespace qcdir::commands {

using io::json;

/// Exit codes shared by every subcommand.
enum Exit : int { ok = 0, warnings = 2, failure = 3 };

struct Options {
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> grid_n;
  bool quiet = false;
};

namespace detail {

inline void say(const Options& o, const std::string& s) {
  if (!o.quiet) std::cout << s << '\n';
}

inline json ladder_json(const TruncationLadder& l) {
  return {{"caps", l.levels},
          {"distances", l.convergence_trace},
          {"converged", l.converged},
          {"final_index", l.final_index}};
}

inline json map_json(const QCMap& f) {
  return {{"iterations", f.iterations},
          {"k_max", f.k_max},
          {"solver_residual", f.solver_residual},
          {"beltrami_residual", f.beltrami_residual}};
}

inline int finish(const Options& o, io::Manifest& m, const std::vector<std::string>& warn) {
  m["status"] = warn.empty() ? "ok" : "warnings";
  m["warnings"] = warn;
  m.write();
  for (const auto& w : warn) say(o, "warning: " + w);
  say(o, "manifest: " + m.path("manifest.json"));
  return warn.empty() ? Exit::ok : Exit::warnings;
}

/// Runs fn; stage failures and rejected configs become exit code 3 with a
/// manifest recording the failure.
template <class Fn>
int guarded(const std::string& command, const Options& o, Fn&& fn) {
  std::filesystem::create_directories(o.out_dir);
  try {
    return fn();
  } catch (const StageFailure& e) {
    io::Manifest m(o.out_dir, command);
    m["status"] = "failure";
    m["stage"] = e.stage();
    m["error"] = e.what();
    m.write();
    std::cerr << "error: " << e.what() << '\n';
    return Exit::failure;
  } catch (const Error& e) {
    io::Manifest m(o.out_dir, command);
    m["status"] = "failure";
    m["stage"] = "config";
    m["error"] = e.what();
    m.write();
    std::cerr << "error: " << e.what() << '\n';
    return Exit::failure;
  }
}

inline config::Config load(const std::string& path, const Options& o, const char* expected) {
  config::Config c = config::with_overrides(config::parse_config(path), o.grid_n, o.seed);
  if (c.problem != expected)
    throw config::ConfigError(config::detail::line_of(c.source, {"problem"}),
                              "problem: this command needs \"" + std::string(expected) + "\", got \"" + c.problem +
                                  "\"");
  return c;
}

}  // namespace detail

inline int solve_beltrami(const std::string& config_path, const Options& o) {
  return detail::guarded("solve-beltrami", o, [&] {
    const auto cfg = detail::load(config_path, o, "beltrami");
    const BeltramiProblem p = config::build_beltrami(cfg);
    const BeltramiSolution s = solve(p);
    io::Manifest m(o.out_dir, "solve-beltrami");
    m["config"] = cfg.canonical;
    m["residuals"] = {{"interior", s.report.interior_residual},
                      {"checked_nodes", s.report.checked_nodes},
                      {"boundary", s.report.boundary_error},
                      {"gauge", s.report.gauge},
                      {"beltrami_map", s.report.beltrami_map_residual},
                      {"conjugate_loop", s.report.loop_residual}};
    json sn = json::array();
    for (const auto& [q, v] : s.report.S_norms) sn.push_back({{"q", q}, {"norm", v}});
    m["S_norms"] = sn;
    m["map"] = detail::map_json(s.f);
    if (s.ladder) m["ladder"] = detail::ladder_json(*s.ladder);
    m.field("omega", s.omega);
    m.field("f", s.f.f);
    m.field("S", s.S);
    m.field("H", s.H);
    m.field("A", s.A);
    detail::say(o, "interior residual " + io::format_double(s.report.interior_residual) + ", boundary error " +
                       io::format_double(s.report.boundary_error));
    return detail::finish(o, m, s.report.warnings);
  });
}

inline int solve_poisson_command(const std::string& config_path, const Options& o) {
  return detail::guarded("solve-poisson", o, [&] {
    const auto cfg = detail::load(config_path, o, "poisson");
    const PoissonProblem p = config::build_poisson(cfg);
    const PoissonSolution s = solve_poisson(p);
    io::Manifest m(o.out_dir, "solve-poisson");
    m["config"] = cfg.canonical;
    m["residuals"] = {{"weak_max", s.report.weak.max_residual},
                      {"weak", s.report.weak.residual},
                      {"boundary", s.report.weak.boundary_error},
                      {"beltrami_map", s.report.beltrami_map_residual}};
    m["holder_exponent"] = s.report.holder_exponent;
    json gn = json::array();
    for (const auto& [q, v] : s.report.G_norms) gn.push_back({{"p", q}, {"norm", v}});
    m["G_norms"] = gn;
    m["map"] = detail::map_json(s.f);
    m.field("u", s.u);
    m.field("f", s.f.f);
    m.field("G", s.G);
    m.field("N", s.N);
    m.field("H", s.H_harm);
    detail::say(o, "weak residual " + io::format_double(s.report.weak.max_residual));
    return detail::finish(o, m, s.report.warnings);
  });
}

inline int qc_map(const std::string& config_path, const Options& o) {
  return detail::guarded("qc-map", o, [&] {
    const auto cfg = detail::load(config_path, o, "qc-map");
    const auto r = config::build_qc_map(cfg);
    QCSolveOptions so;
    so.tol = r.solver_tol;
    std::vector<std::string> warn;
    QCMap f;
    std::optional<TruncationLadder> ladder;
    qcdir::detail::run_stage("qc_map", [&] {
      if (r.degenerate) {
        ladder = solve_degenerate(r.mu, r.domain, r.ladder_caps, r.ladder_tol, so);
        f = ladder->maps[ladder->final_index];
        if (!ladder->converged) warn.push_back("truncation ladder did not converge");
      } else {
        f = solve_mu_conformal(r.mu, so);
      }
      if (!homeomorphism_probe(f, 0.01, r.seed)) warn.push_back("homeomorphism probe failed");
      return 0;
    });
    io::Manifest m(o.out_dir, "qc-map");
    m["config"] = cfg.canonical;
    m["map"] = detail::map_json(f);
    if (ladder) m["ladder"] = detail::ladder_json(*ladder);
    m.field("f", f.f);
    m.field("J", f.J);
    detail::say(o, "beltrami residual " + io::format_double(f.beltrami_residual));
    return detail::finish(o, m, warn);
  });
}

/// One CSV row per (z0, criterion); each trace goes to traces/<row>.csv.
inline int audit_criteria(const std::string& config_path, const Options& o) {
  return detail::guarded("audit-criteria", o, [&] {
    const auto cfg = detail::load(config_path, o, "audit");
    const auto r = config::build_audit(cfg);
    std::filesystem::create_directories(std::filesystem::path(o.out_dir) / "traces");
    io::Manifest m(o.out_dir, "audit-criteria");
    m["config"] = cfg.canonical;
    std::ofstream rows(m.path("verdicts.csv"));
    rows << "x0,y0,criterion,verdict,exponent,eps0,trace\n";
    std::vector<std::string> warn;
    json summary = json::object();
    std::size_t row = 0;
    for (const cplx& z0 : r.points) {
      const double eps0 = r.eps0 ? *r.eps0 : default_eps0(z0, r.domain);
      const OffsetFunction KT = tangent_dilatation_offset(r.mu, z0);
      for (const auto& c : r.criteria) {
        CriterionVerdict v;
        if (c == "fmo")
          v = fmo_test(r.dominant ? *r.dominant : KT, eps0, r.ladder);
        else if (c == "mean")
          v = mean_test(KT, eps0, r.ladder);
        else if (c == "cz")
          v = cz_test(KT, eps0, r.ladder);
        else if (c == "lehto")
          v = lehto_test(KT, eps0, r.ladder);
        else if (c == "orlicz")
          v = orlicz_test(KT, eps0, r.phi, r.Delta, r.ladder);
        else if (c == "exp")
          v = exp_test(KT, eps0, r.alpha, r.ladder);
        else
          v = psi_condition_test(KT, r.psi, eps0, r.ladder);
        const std::string trace = "traces/" + std::to_string(row++) + "_" + c + ".csv";
        {
          std::ofstream t(m.path(trace));
          t << "eps,value\n";
          for (const auto& p : v.trace) t << io::format_double(p.eps) << ',' << io::format_double(p.value) << '\n';
        }
        m.add_file(trace);
        rows << io::format_double(z0.real()) << ',' << io::format_double(z0.imag()) << ',' << c << ','
             << name(v.verdict) << ',' << io::format_double(v.exponent) << ',' << io::format_double(eps0) << ','
             << trace << '\n';
        json& count = summary[c][name(v.verdict)];
        count = count.is_null() ? 1 : count.get<int>() + 1;
        if (v.verdict == Verdict::inconclusive) {
          std::ostringstream os;
          os << c << " inconclusive at (" << z0.real() << ", " << z0.imag() << ")";
          warn.push_back(os.str());
        }
      }
    }
    rows.close();
    m.add_file("verdicts.csv", {{"rows", row}});
    m["verdicts"] = summary;
    if (r.dominant) m["dominant"] = r.dominant_name;
    detail::say(o, std::to_string(row) + " verdicts written to " + m.path("verdicts.csv"));
    return detail::finish(o, m, warn);
  });
}

}  // namespace qcdir::commands
