// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qcdir/beltrami.hpp"
#include "qcdir/calculus.hpp"
#include "qcdir/criteria.hpp"
#include "qcdir/poisson.hpp"
#include "qcdir/presets.hpp"
#include "qcdir/singular_integrals.hpp"
#include "quadrature_oracles.hpp"

using namespace qcdir;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ComplexField disk_c(const Grid& g, double R) {
  return sample_complex(g, [R](cplx z) { return std::abs(z) <= R ? cplx(1.0) : cplx(0.0); });
}

RealField disk_r(const Grid& g, double R) { return real_part(disk_c(g, R)); }

// Relative L2 error of dbar C[S] against S (or Lap N[G] against G) on nodes
// two cells in from the edge; the jump case skips a fixed band around |z| = 1.
double operator_error(int n, bool jump, bool potential) {
  Grid g({0, 0}, 2.0, n);
  const double band = 2 * 4.0 / 256;
  auto S = jump ? disk_c(g, 1.0) : sample_complex(g, [](cplx z) { return cplx(std::exp(-12 * std::norm(z))); });
  ComplexField D;
  if (potential)
    D = to_complex(laplacian(log_potential(real_part(S))));
  else
    D = wirtinger_derivatives(cauchy_transform(S)).second;
  double num = 0, den = 0;
  for (int j = 2; j < n - 2; ++j)
    for (int i = 2; i < n - 2; ++i) {
      if (jump && std::abs(std::abs(g.node(i, j)) - 1.0) < band) continue;
      const cplx s = potential ? cplx(S(i, j).real()) : S(i, j);
      num += std::norm(D(i, j) - s);
      den += std::norm(s);
    }
  return std::sqrt(num / den);
}

Outcome operator_identities() {
  Outcome o;
  for (bool potential : {false, true})
    for (bool jump : {true, false}) {
      const auto t0 = std::chrono::steady_clock::now();
      const double e1 = operator_error(256, jump, potential);
      const double e2 = operator_error(512, jump, potential);
      const double t = seconds_since(t0);
      const std::string tag = std::string(potential ? "LapN " : "dbarC ") + (jump ? "disk" : "gauss");
      o.require(e1 <= 5e-2 && e2 <= 0.5 * e1 && t <= 10.0,
                tag + " " + fmt("%.2e", e1) + " ratio " + fmt("%.3f", e2 / e1) + " " + fmt("%.1fs", t));
    }
  return o;
}

Outcome disk_potential() {
  Outcome o;
  Grid g({0, 0}, 2.5, 512);
  auto N = log_potential(disk_r(g, 1.0));
  const double listed[] = {0.0, 0.25, 0.5966};
  for (int k = 0; k < 3; ++k) {
    const cplx z(k, 0);
    const double v = interpolate_value(N, z);
    o.require(std::abs(v - listed[k]) <= 1e-2, "N(" + std::to_string(k) + ")=" + fmt("%.4f", v) + " listed " +
                                                   fmt("%.4f", listed[k]) + " quadrature " +
                                                   fmt("%.4f", oracle::log_potential_disk(1.0, z)));
  }
  return o;
}

Outcome radial_stretch_solver() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Grid g({0, 0}, 1.25, 512);
  auto m = solve_mu_conformal(presets::radial_stretch_mu(g, 2.0), 1e-10);
  const double t = seconds_since(t0);
  double err = 0, jmin = 1e300;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const cplx z = g.node(i, j);
      if (std::abs(z) <= 0.9) err = std::max(err, std::abs(m.f(i, j) - presets::radial_stretch_map(z, 2.0)));
      jmin = std::min(jmin, m.J(i, j));
    }
  o.require(err < 1e-2, "max error " + fmt("%.2e", err));
  o.require(m.beltrami_residual <= 1e-3, "beltrami residual " + fmt("%.2e", m.beltrami_residual));
  o.require(jmin > 0, "min J " + fmt("%.3e", jmin));
  o.require(t <= 60, fmt("%.1fs", t));
  return o;
}

Outcome analytic_beltrami() {
  Outcome o;
  Grid g({0, 0}, 1.25, 512);
  auto d = disk_domain(0, 1, 512);
  BeltramiProblem p{d, ComplexField(g, 0.0), ComplexField(g, 0.0), boundary_data_from(d, [](cplx z) { return z.real(); })};
  auto s = solve(p);
  double err = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (s.omega.active(k)) err = std::max(err, std::abs(s.omega.values[k] - g.node(k % g.n(), k / g.n())));
  o.require(err <= 1e-2, "interior " + fmt("%.2e", err));
  o.require(s.report.boundary_error <= 2e-2, "boundary " + fmt("%.2e", s.report.boundary_error));
  return o;
}

Outcome source_beltrami() {
  Outcome o;
  Grid g({0, 0}, 1.25, 256);
  auto d = disk_domain(0, 1, 512);
  BeltramiProblem p{d, ComplexField(g, 0.0), disk_c(g, 0.5), BoundaryData(std::vector<double>(512, 0.0)), 0.8};
  auto s = solve(p);
  const cplx w = evaluate(s, 0.8);
  // C[sigma] = 1/(4z) outside the source; the harmonic part is -z/4.
  o.require(std::abs(w.real() - 0.1125) <= 1e-2, "omega(0.8)=" + fmt("%.4f", w.real()));
  o.require(std::abs(w.imag()) <= 1e-12, "gauge " + fmt("%.1e", w.imag()));
  o.require(s.report.interior_residual <= 1e-2, "residual " + fmt("%.2e", s.report.interior_residual));
  return o;
}

Outcome anchor_uniqueness() {
  Outcome o;
  Grid g({0, 0}, 1.25, 256);
  auto d = disk_domain(0, 1, 512);
  auto sigma = sample_complex(g, [](cplx z) {
    const double e = std::exp(-20.0 * std::norm(z));
    return e < 1e-6 ? cplx(0.0) : e * cplx(1.0, 0.5);
  });
  BeltramiProblem p{d, presets::constant_disk_mu(g, 0.3, 1.0), sigma,
                    boundary_data_from(d, [](cplx z) { return z.imag(); }), 0.0};
  auto a = solve(p);
  p.anchor = {0.3, -0.2};
  auto b = solve(p);
  double re = 0, mean = 0, sq = 0;
  const auto probe = probe_compact(g, d);
  for (cplx z : probe) {
    const int i = static_cast<int>(std::lround(g.fi(z))), j = static_cast<int>(std::lround(g.fj(z)));
    re = std::max(re, std::abs(a.omega(i, j).real() - b.omega(i, j).real()));
    const double di = a.omega(i, j).imag() - b.omega(i, j).imag();
    mean += di, sq += di * di;
  }
  mean /= probe.size();
  const double sd = std::sqrt(std::max(0.0, sq / probe.size() - mean * mean));
  o.require(re <= 1e-3, "Re sup " + fmt("%.1e", re));
  o.require(sd <= 1e-3, "Im sd " + fmt("%.1e", sd));
  return o;
}

std::string trace_str(const TruncationLadder& L) {
  std::string s;
  for (double v : L.convergence_trace) s += (s.empty() ? "" : ",") + fmt("%.1e", v);
  return s;
}

Outcome truncation_ladder() {
  Outcome o;
  QCSolveOptions opt;
  opt.tol = 1e-8;
  {
    Grid g({0, 0}, 1.25, 512);
    auto L = solve_degenerate(presets::boundary_log_mu(g), disk_domain(0, 1), default_caps(), 1e-3, opt);
    bool monotone = true;
    for (std::size_t k = 1; k < L.convergence_trace.size(); ++k)
      monotone = monotone && L.convergence_trace[k] <= L.convergence_trace[k - 1];
    o.require(L.converged && monotone && L.levels[L.final_index] <= 64, "log class [" + trace_str(L) + "] at cap " +
                                                                       fmt("%.0f", L.levels[L.final_index]));
  }
  {
    Grid g({0, 0}, 1.25, 256);
    auto L = solve_degenerate(presets::boundary_power_mu(g), disk_domain(0, 1), default_caps(), 1e-3, opt);
    const double last = L.convergence_trace.back();
    o.require(!L.converged && last >= 1e-3, "power control [" + trace_str(L) + "]");
  }
  return o;
}

Outcome verdict_table() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double eps0 = 0.5 * std::exp(-std::exp(1.0));
  struct Row {
    const char* name;
    OffsetFunction f;
    const char* expect;  // FMO MEAN CZ LEHTO ORLICZ PSI(1/t) PSI(1/(t log))
  };
  const std::vector<Row> rows{{"const", q_preset("const", 2.0), "SSSSSSS"},
                              {"log", q_preset("log"), "SVVSSVS"},
                              {"log^0.5", q_preset("pow-log", 0.5), "SVSSSSS"},
                              {"1/r", q_preset("inv-r"), "VVVVVVV"},
                              {"exp-int", q_preset("exp-int"), "SVVSSVS"}};
  int wrong = 0;
  std::string miss;
  for (const auto& r : rows) {
    const Verdict got[] = {fmo_test(r.f, eps0).verdict,
                           mean_test(r.f, eps0).verdict,
                           cz_test(r.f, eps0).verdict,
                           lehto_test(r.f, eps0).verdict,
                           orlicz_test(r.f, eps0, orlicz_exp(1), 1.0).verdict,
                           psi_condition_test(r.f, psi_inverse(), eps0).verdict,
                           psi_condition_test(r.f, psi_inverse_log(), eps0).verdict};
    for (int c = 0; c < 7; ++c) {
      const Verdict want = r.expect[c] == 'S' ? Verdict::satisfied : Verdict::violated;
      if (got[c] != want) {
        ++wrong;
        miss += std::string(" ") + r.name + "/" + std::to_string(c);
      }
    }
  }
  const double t = seconds_since(t0);
  o.require(wrong == 0, std::to_string(35 - wrong) + "/35 agree" + miss);
  o.require(t <= 30, fmt("%.1fs", t));
  return o;
}

Outcome equivalence() {
  Outcome o;
  struct Case {
    const char* label;
    OrliczFunction phi;
    Growth expected;
  };
  for (const auto& c : {Case{"e^t", orlicz_exp(1), Growth::divergent}, Case{"e^2t", orlicz_exp(2), Growth::divergent},
                        Case{"t^2", orlicz_power(2), Growth::convergent},
                        Case{"exp(sqrt t)", orlicz_exp_sqrt(), Growth::convergent},
                        Case{"exp(t/log(e+t))", orlicz_exp_over_log(), Growth::divergent}}) {
    const auto r = condition_equivalence_suite(c.phi, 1.0);
    bool match = r.conditions.size() == 5;
    for (const auto& cond : r.conditions) match = match && cond.fit.growth == c.expected;
    o.require(r.asserted && r.uniform && match,
              std::string(c.label) + " " + (c.expected == Growth::divergent ? "divergent" : "convergent"));
  }
  return o;
}

Outcome fmo_growth() {
  Outcome o;
  const auto g = fmo_growth_check(q_preset("log"), 0.0625, 11);
  o.require(std::abs(g.slope / (2 * kPi) - 1) <= 0.1, "slope/2pi " + fmt("%.6f", g.slope / (2 * kPi)) + " eps " +
                                                         fmt("%.2e", g.eps.front()) + ".." + fmt("%.2e", g.eps.back()));
  return o;
}

Outcome poisson_dictionary() {
  Outcome o;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const cplx mu = std::polar(0.95 * u(rng), 2 * kPi * u(rng));
    worst = std::max(worst, std::abs(mu_from_A(A_from_mu(mu)) - mu));
  }
  o.require(worst <= 1e-12, "round trip " + fmt("%.1e", worst));
  const cplx d = mu_from_A({3.0, 0.0, 0.0, 1.0 / 3.0});
  o.require(d == cplx(-0.5, 0.0), "diag(3,1/3) -> " + fmt("%.17g", d.real()) + fmt("%+gi", d.imag()));
  return o;
}

PoissonProblem disk_poisson(const Grid& g, RealField src, std::function<double(cplx)> phi) {
  auto d = disk_domain(0, 1, 512);
  return {d, MatrixField(g), std::move(src), boundary_data_from(d, std::move(phi))};
}

Outcome poisson_end_to_end() {
  Outcome o;
  std::vector<double> weak;
  PoissonSolution s;
  for (int n : {64, 128, 256}) {
    Grid g({0, 0}, 1.25, n);
    s = solve_poisson(disk_poisson(g, disk_r(g, 0.5), [](cplx) { return 0.0; }));
    weak.push_back(s.report.weak.max_residual);
  }
  // u = r^2/4 - (ln 2)/8 - 1/16 inside r < 1/2.
  const double u0 = evaluate(s, 0.0);
  o.require(std::abs(u0 + 0.1491) <= 1e-2, "u(0)=" + fmt("%.4f", u0));
  o.require(weak.back() <= 1e-2 && weak[1] < weak[0] && weak[2] < weak[1],
            "weak " + fmt("%.1e", weak[0]) + "," + fmt("%.1e", weak[1]) + "," + fmt("%.1e", weak[2]));
  Grid g({0, 0}, 1.25, 128);
  auto p = disk_poisson(g, RealField(g, 0.0), [](cplx z) { return std::cos(3 * std::arg(z)) + 0.5 * z.imag(); });
  double lo = 1e300, hi = -1e300;
  for (std::size_t k = 0; k < p.phi.size(); ++k) lo = std::min(lo, p.phi[k]), hi = std::max(hi, p.phi[k]);
  auto h = solve_poisson(p);
  double over = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (h.u.active(k)) over = std::max({over, lo - h.u.values[k], h.u.values[k] - hi});
  o.require(over <= 1e-3, "max principle excess " + fmt("%.1e", std::max(over, 0.0)));
  return o;
}

Outcome divergence_identity() {
  Outcome o;
  Grid g({0, 0}, 1.25, 512);
  auto mu = presets::radial_stretch_mu(g, 2.0);
  auto f = solve_mu_conformal(mu, 1e-10);
  auto r = divergence_identity_check([](cplx w) { return (w * w).real(); }, f, A_from_mu(mu), disk_domain(0, 1));
  o.require(r.max_difference <= 1e-2, "difference " + fmt("%.2e", r.max_difference));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"operator identities", operator_identities},
      {"disk potential values", disk_potential},
      {"radial stretch solver", radial_stretch_solver},
      {"analytic Beltrami Dirichlet", analytic_beltrami},
      {"Beltrami with disk source", source_beltrami},
      {"uniqueness up to imaginary constant", anchor_uniqueness},
      {"truncation ladder", truncation_ladder},
      {"criteria verdict table", verdict_table},
      {"Orlicz condition equivalence", equivalence},
      {"FMO growth of log(1/|z|)", fmo_growth},
      {"Poisson dictionary", poisson_dictionary},
      {"Poisson end to end", poisson_end_to_end},
      {"divergence identity", divergence_identity}};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("threw: ") + e.what());
    }
    failed += !o.pass;
    std::printf("ACCEPTANCE %2zu %s  %s: %s (%.1fs)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
