#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qcdir/calculus.hpp"
#include "qcdir/domain.hpp"
#include "qcdir/error.hpp"
#include "qcdir/grid.hpp"
#include "qcdir/harmonic.hpp"
#include "qcdir/qc_solver.hpp"
#include "qcdir/singular_integrals.hpp"

namespace qcdir {

/// omega_zbar = mu omega_z + sigma in D, Re omega = phi on the boundary,
/// gauge Im omega(anchor) = 0. mu and sigma live on the same grid.
struct BeltramiProblem {
  DomainSpec domain;
  ComplexField mu;
  ComplexField sigma;
  BoundaryData phi;
  cplx anchor{0.0, 0.0};
  double solver_tol = 1e-10;
  bool degenerate = false;  // use the truncation ladder
  std::vector<double> ladder_caps = default_caps();
  double ladder_tol = 1e-3;
  double residual_tol = 1e-2;
  double boundary_tol = 2e-2;
  std::uint64_t seed = 1;  // probe sampling
};

struct BeltramiReport {
  double interior_residual = 0.0;    // ||omega_zbar - mu omega_z - sigma||_2 over the checked nodes
  std::size_t checked_nodes = 0;
  double boundary_error = 0.0;       // max |Re omega - phi| at samples moved 2 spacings inward
  double gauge = 0.0;                // Im omega(anchor)
  double beltrami_map_residual = 0.0;
  double loop_residual = 0.0;
  std::vector<std::pair<double, double>> S_norms;  // (q, ||S||_q)
  std::vector<std::string> warnings;
};

struct BeltramiSolution {
  ComplexField omega;  // on the interior nodes of D
  QCMap f;
  std::optional<TruncationLadder> ladder;
  DomainSpec image_domain;  // f(boundary samples)
  ComplexField S;           // on the image grid
  ComplexField H;
  ComplexField A;           // u + i v on the image grid
  std::shared_ptr<const DoubleLayer> layer;
  RealField v;
  BeltramiReport report;
};

namespace detail {

template <class Fn>
auto run_stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(name, e.what());
  }
}

// Nodes whose value differs from a 4-neighbour by more than `jump`.
inline std::vector<std::uint8_t> jump_set(const ComplexField& f, double jump) {
  const Grid& g = f.grid;
  std::vector<std::uint8_t> out(g.size(), 0);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const cplx v = f(i, j);
      if ((i + 1 < g.n() && std::abs(f(i + 1, j) - v) > jump) || (j + 1 < g.n() && std::abs(f(i, j + 1) - v) > jump)) {
        out[g.index(i, j)] = 1;
        if (i + 1 < g.n()) out[g.index(i + 1, j)] = 1;
        if (j + 1 < g.n()) out[g.index(i, j + 1)] = 1;
      }
    }
  return out;
}

inline std::vector<std::uint8_t> dilate(const Grid& g, const std::vector<std::uint8_t>& s, int r) {
  std::vector<std::uint8_t> out(g.size(), 0);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      if (!s[g.index(i, j)]) continue;
      for (int q = std::max(0, j - r); q <= std::min(g.n() - 1, j + r); ++q)
        for (int p = std::max(0, i - r); p <= std::min(g.n() - 1, i + r); ++p) out[g.index(p, q)] = 1;
    }
  return out;
}

}  // namespace detail

/// Grid of the same size covering the bounding box of f(boundary), padded so
/// that the image domain stays inside 0.8 of the box.
inline Grid image_grid(const QCMap& map, const DomainSpec& domain) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const cplx& z : domain.boundary()) {
    const cplx w = map(z);
    x0 = std::min(x0, w.real()), x1 = std::max(x1, w.real());
    y0 = std::min(y0, w.imag()), y1 = std::max(y1, w.imag());
  }
  const double half = 0.5 * std::max(x1 - x0, y1 - y0);
  return Grid({0.5 * (x0 + x1), 0.5 * (y0 + y1)}, 1.25 * half, map.grid().n());
}

namespace detail {

// Bounding box {x0, x1, y0, y1} of f over the cells touching nonzero active
// nodes of `s`; empty when s vanishes.
template <class T>
std::optional<std::array<double, 4>> support_image_box(const Field<T>& s, const QCMap& map) {
  const Grid& g = s.grid;
  std::array<double, 4> b{1e300, -1e300, 1e300, -1e300};
  bool any = false;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      if (!s.active(i, j) || s(i, j) == T(0)) continue;
      any = true;
      for (int q = std::max(0, j - 1); q <= std::min(g.n() - 1, j + 1); ++q)
        for (int p = std::max(0, i - 1); p <= std::min(g.n() - 1, i + 1); ++p) {
          const cplx w = map.f(p, q);
          b[0] = std::min(b[0], w.real()), b[1] = std::max(b[1], w.real());
          b[2] = std::min(b[2], w.imag()), b[3] = std::max(b[3], w.imag());
        }
    }
  if (!any) return std::nullopt;
  return b;
}

inline double positive_jacobian(const QCMap& map, cplx z) {
  const double J = interpolate_value(map.J, z);
  if (!(J > 0)) {
    std::ostringstream os;
    os << "non-positive Jacobian " << J << " at preimage " << z;
    throw NonConvergence(os.str());
  }
  return J;
}

}  // namespace detail

/// S = (sigma f_z / J) o f^{-1} sampled on `target`; zero off f(supp sigma).
inline ComplexField pushforward_source(const ComplexField& sigma, const QCMap& map, const Grid& target) {
  ComplexField S(target, 0.0);
  const auto box = detail::support_image_box(sigma, map);
  if (!box) return S;
  const auto [x0, x1, y0, y1] = *box;
  const ComplexField s = extend_outside(sigma, cplx(0.0));
  for (int j = 0; j < target.n(); ++j)
    for (int i = 0; i < target.n(); ++i) {
      const cplx w = target.node(i, j);
      if (w.real() < x0 || w.real() > x1 || w.imag() < y0 || w.imag() > y1) continue;
      const cplx z = invert(map, w);
      const cplx sv = interpolate_value(s, z);
      if (sv == cplx(0.0)) continue;
      S(i, j) = sv * interpolate_value(map.f_z, z) / detail::positive_jacobian(map, z);
    }
  return S;
}

/// phi*(f(zeta_k)) = phi(zeta_k) - Re H(f(zeta_k)).
inline BoundaryData transfer_boundary(const BoundaryData& phi, const QCMap& map, const ComplexField& H,
                                      const DomainSpec& domain) {
  std::vector<double> out(domain.size());
  for (std::size_t k = 0; k < domain.size(); ++k) {
    const cplx hv = interpolate_value(H, map(domain[k]));
    if (!std::isfinite(hv.real()) || !std::isfinite(hv.imag()))
      throw InvalidInput("non-finite Cauchy transform at boundary sample " + std::to_string(k));
    out[k] = phi[k] - hv.real();
  }
  return BoundaryData(std::move(out));
}

/// omega at an interior point of D.
inline cplx evaluate(const BeltramiSolution& s, cplx z) {
  const cplx w = s.f(z);
  const double u = (*s.layer)(w);
  return cplx(u, interpolate_value(s.v, w)) + interpolate_value(s.H, w);
}

inline void validate(const BeltramiProblem& p) {
  const Grid& g = p.mu.grid;
  if (!(p.sigma.grid == g)) throw InvalidInput("mu and sigma must share one grid");
  if (p.phi.size() != p.domain.size()) throw InvalidInput("boundary data size does not match the domain sample");
  if (!p.domain.contains(p.anchor)) throw InvalidInput("anchor must be an interior point of the domain");
  const double L = g.half_width();
  for (const cplx& z : p.domain.boundary()) {
    const cplx d = z - g.center();
    if (std::abs(d.real()) > 0.9 * L || std::abs(d.imag()) > 0.9 * L)
      throw InvalidInput("domain must lie inside 0.9 of the grid box (compact-support margin)");
  }
  const double margin = 0.05 * p.domain.diameter();
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      if (!p.sigma.active(i, j) || p.sigma(i, j) == cplx(0.0)) continue;
      const cplx z = g.node(i, j);
      if (!p.domain.contains(z) || p.domain.distance_to_boundary(z) < margin) {
        std::ostringstream os;
        os << "sigma must have compact support in D at distance >= 0.05 diam(D) from the boundary; node (" << i
           << ", " << j << ") violates the compact-support margin";
        throw InvalidInput(os.str());
      }
    }
}

inline BeltramiReport residual_report(const BeltramiSolution& s, const BeltramiProblem& p) {
  BeltramiReport r = s.report;
  const Grid& g = s.omega.grid;
  const double h = g.spacing();
  auto [wz, wzb] = wirtinger_derivatives(extend_outside(s.omega, cplx(0.0)));
  const auto excl = detail::dilate(g, detail::jump_set(extend_outside(p.sigma, cplx(0.0)), 1e-9), 2);
  const auto excl_mu = detail::dilate(g, detail::jump_set(extend_outside(p.mu, cplx(0.0)), 0.1), 2);
  double acc = 0.0;
  r.checked_nodes = 0;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const std::size_t k = g.index(i, j);
      if (!s.omega.active(k) || excl[k] || excl_mu[k]) continue;
      if (p.domain.distance_to_boundary(g.node(i, j)) < 2 * h) continue;
      acc += std::norm(wzb.values[k] - p.mu.values[k] * wz.values[k] - p.sigma.values[k]);
      ++r.checked_nodes;
    }
  r.interior_residual = std::sqrt(acc * g.cell_area());

  double be = 0.0;
  const std::size_t m = p.domain.size();
  for (std::size_t k = 0; k < m; ++k) {
    const cplx t = p.domain[(k + 1) % m] - p.domain[(k + m - 1) % m];
    const cplx inward = cplx(0, 1) * t / std::abs(t);
    const cplx z = p.domain[k] + 2.0 * h * inward;
    be = std::max(be, std::abs(evaluate(s, z).real() - p.phi[k]));
  }
  r.boundary_error = be;
  r.gauge = evaluate(s, p.anchor).imag();
  return r;
}

/// Full factorization pipeline omega = (A + H) o f; failures carry the stage name.
inline BeltramiSolution solve(const BeltramiProblem& p) {
  detail::run_stage("validate", [&] {
    validate(p);
    return 0;
  });
  BeltramiSolution s;
  const Grid& g = p.mu.grid;
  const auto inside = p.domain.mask(g);

  ComplexField mu = p.mu;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!inside[k] || !p.mu.active(k)) mu.values[k] = 0.0;
  mu.mask.reset();

  detail::run_stage("qc_map", [&] {
    QCSolveOptions o;
    o.tol = p.solver_tol;
    if (p.degenerate) {
      s.ladder = solve_degenerate(mu, p.domain, p.ladder_caps, p.ladder_tol, o);
      s.f = s.ladder->maps[s.ladder->final_index];
      if (!s.ladder->converged) s.report.warnings.push_back("truncation ladder did not converge");
    } else {
      s.f = solve_mu_conformal(mu, o);
    }
    if (!homeomorphism_probe(s.f, 0.01, p.seed)) s.report.warnings.push_back("homeomorphism probe failed");
    return 0;
  });
  s.report.beltrami_map_residual = s.f.beltrami_residual;

  const Grid gs = detail::run_stage("image_domain", [&] {
    std::vector<cplx> img(p.domain.size());
    for (std::size_t k = 0; k < img.size(); ++k) img[k] = s.f(p.domain[k]);
    s.image_domain = DomainSpec(std::move(img));
    return image_grid(s.f, p.domain);
  });

  s.S = detail::run_stage("pushforward", [&] { return pushforward_source(p.sigma, s.f, gs); });
  for (double q : {2.5, 3.0, 4.0}) s.report.S_norms.emplace_back(q, lq_norm(s.S, q));
  s.H = detail::run_stage("cauchy", [&] { return cauchy_transform(s.S); });
  const BoundaryData phi_star = detail::run_stage("transfer_boundary", [&] {
    return transfer_boundary(p.phi, s.f, s.H, p.domain);
  });
  HarmonicSolution hs = detail::run_stage("harmonic", [&] {
    return solve_dirichlet_harmonic(s.image_domain, phi_star, gs);
  });
  s.layer = hs.layer;
  const cplx wa = s.f(p.anchor);
  detail::run_stage("conjugate", [&] {
    ConjugateResult c = harmonic_conjugate(hs.u, s.image_domain, wa, 1e-3, 10, p.seed);
    s.report.loop_residual = c.loop_residual;
    if (!c.loop_ok) s.report.warnings.push_back("conjugate loop residual above tolerance");
    s.v = std::move(c.v);
    const double shift = interpolate_value(s.H, wa).imag();
    for (std::size_t k = 0; k < gs.size(); ++k)
      if (s.v.active(k)) s.v.values[k] -= shift;
    return 0;
  });
  s.A = ComplexField(gs, 0.0);
  s.A.mask = s.v.mask;
  for (std::size_t k = 0; k < gs.size(); ++k)
    if (s.v.active(k)) s.A.values[k] = cplx(hs.u.values[k], s.v.values[k]);

  detail::run_stage("compose", [&] {
    s.omega = ComplexField(g, 0.0);
    s.omega.mask = inside;
    for (int j = 0; j < g.n(); ++j)
      for (int i = 0; i < g.n(); ++i) {
        if (!inside[g.index(i, j)]) continue;
        const cplx w = s.f.f(i, j);
        s.omega(i, j) = cplx((*s.layer)(w), interpolate_value(s.v, w)) + interpolate_value(s.H, w);
      }
    return 0;
  });
  s.report = residual_report(s, p);
  if (s.report.interior_residual > p.residual_tol) s.report.warnings.push_back("interior residual above tolerance");
  if (s.report.boundary_error > p.boundary_tol) s.report.warnings.push_back("boundary error above tolerance");
  return s;
}

}  // namespace qcdir
