#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcdir/beltrami.hpp"
#include "qcdir/calculus.hpp"
#include "qcdir/domain.hpp"
#include "qcdir/error.hpp"
#include "qcdir/grid.hpp"
#include "qcdir/harmonic.hpp"
#include "qcdir/qc_solver.hpp"
#include "qcdir/singular_integrals.hpp"

namespace qcdir {

// div[A grad u] = g in D, u = phi on the boundary, solved as u = (H + N^G) o f
// with f the mu_A-conformal map, G = (g/J) o f^-1, N^G its logarithmic
// potential and H harmonic in f(D).

/// Symmetric 2x2 matrix field with det 1.
struct MatrixField {
  RealField a11, a12, a21, a22;

  MatrixField() = default;
  explicit MatrixField(const Grid& g) : a11(g, 1.0), a12(g, 0.0), a21(g, 0.0), a22(g, 1.0) {}

  const Grid& grid() const { return a11.grid; }
  std::array<double, 4> at(std::size_t k) const {
    return {a11.values[k], a12.values[k], a21.values[k], a22.values[k]};
  }
  void set(std::size_t k, const std::array<double, 4>& a) {
    a11.values[k] = a[0], a12.values[k] = a[1], a21.values[k] = a[2], a22.values[k] = a[3];
  }
};

/// mu_A = -(a11 - a22 + i(a12 + a21)) / (2 + a11 + a22).
inline cplx mu_from_A(const std::array<double, 4>& a) {
  const double den = 2.0 + a[0] + a[3];
  if (!(den > 0.0)) throw InvalidInput("ellipticity violated: 2 + a11 + a22 <= 0");
  const cplx mu = -cplx(a[0] - a[3], a[1] + a[2]) / den;
  if (!(std::abs(mu) < 1.0)) throw InvalidInput("ellipticity violated: |mu_A| >= 1");
  return mu;
}

/// [[|1 - mu|^2, -2 Im mu], [-2 Im mu, |1 + mu|^2]] / (1 - |mu|^2).
inline std::array<double, 4> A_from_mu(cplx mu) {
  const double m2 = std::norm(mu);
  if (!(m2 < 1.0)) throw InvalidInput("A_from_mu needs |mu| < 1");
  const double d = 1.0 - m2;
  const double off = -2.0 * mu.imag() / d;
  return {std::norm(1.0 - mu) / d, off, off, std::norm(1.0 + mu) / d};
}

/// Throws naming the first violated invariant (symmetry, det A = 1,
/// det(I + A) > 0) among the nodes flagged in `where` (all nodes if null).
inline void check_matrix(const MatrixField& A, const std::vector<std::uint8_t>* where = nullptr, double tol = 1e-8) {
  const Grid& g = A.grid();
  for (const RealField* f : {&A.a12, &A.a21, &A.a22})
    if (!(f->grid == g)) throw InvalidInput("matrix entries must share one grid");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (where && !(*where)[k]) continue;
    const auto a = A.at(k);
    std::ostringstream os;
    os << " at node " << k;
    for (double v : a)
      if (!std::isfinite(v)) throw InvalidInput("matrix entry not finite" + os.str());
    const double scale = 1.0 + std::abs(a[0]) + std::abs(a[3]);
    if (std::abs(a[1] - a[2]) > tol * scale) throw InvalidInput("symmetry a12 = a21 violated" + os.str());
    if (std::abs(a[0] * a[3] - a[1] * a[2] - 1.0) > tol * scale * scale)
      throw InvalidInput("det A = 1 violated" + os.str());
    if (!((1.0 + a[0]) * (1.0 + a[3]) > a[1] * a[2])) throw InvalidInput("ellipticity det(I + A) > 0 violated" + os.str());
  }
}

/// mu_A per node; nodes outside `where` get 0.
inline ComplexField mu_from_A(const MatrixField& A, const std::vector<std::uint8_t>* where = nullptr) {
  check_matrix(A, where);
  ComplexField mu(A.grid(), 0.0);
  for (std::size_t k = 0; k < mu.values.size(); ++k)
    if (!where || (*where)[k]) mu.values[k] = mu_from_A(A.at(k));
  return mu;
}

inline MatrixField A_from_mu(const ComplexField& mu) {
  MatrixField A(mu.grid);
  for (std::size_t k = 0; k < mu.values.size(); ++k) A.set(k, A_from_mu(mu.values[k]));
  return A;
}

/// G = (g / J) o f^-1 on `target`; zero off f(supp g).
inline RealField pushforward_density(const RealField& g, const QCMap& map, const Grid& target) {
  RealField G(target, 0.0);
  const auto box = detail::support_image_box(g, map);
  if (!box) return G;
  const auto [x0, x1, y0, y1] = *box;
  const RealField s = extend_outside(g, 0.0);
  for (int j = 0; j < target.n(); ++j)
    for (int i = 0; i < target.n(); ++i) {
      const cplx w = target.node(i, j);
      if (w.real() < x0 || w.real() > x1 || w.imag() < y0 || w.imag() > y1) continue;
      const cplx z = invert(map, w);
      const double gv = interpolate_value(s, z);
      if (gv == 0.0) continue;
      G(i, j) = gv / detail::positive_jacobian(map, z);
    }
  return G;
}

/// psi(z) = (1 - |(z - c)/rho|^2)^3 on the disc |z - c| < rho.
struct Bump {
  cplx c;
  double rho;

  double value(cplx z) const {
    const double s = std::norm(z - c) / (rho * rho);
    return s < 1.0 ? (1.0 - s) * (1.0 - s) * (1.0 - s) : 0.0;
  }
  cplx grad(cplx z) const {  // (psi_x, psi_y) as x + i y
    const double s = std::norm(z - c) / (rho * rho);
    if (s >= 1.0) return 0.0;
    return -6.0 * (1.0 - s) * (1.0 - s) * (z - c) / (rho * rho);
  }
};

/// side x side centres on the interior lattice of the bounding box of D,
/// radius min(lattice step, 0.8 dist(c, boundary)); centres outside D are skipped.
inline std::vector<Bump> bump_basis(const DomainSpec& d, int count = 25) {
  const int side = static_cast<int>(std::lround(std::sqrt(count)));
  if (side < 1 || side * side != count) throw InvalidInput("test basis size must be a perfect square");
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const cplx& z : d.boundary()) {
    x0 = std::min(x0, z.real()), x1 = std::max(x1, z.real());
    y0 = std::min(y0, z.imag()), y1 = std::max(y1, z.imag());
  }
  const double sx = (x1 - x0) / (side + 1), sy = (y1 - y0) / (side + 1);
  std::vector<Bump> out;
  for (int b = 1; b <= side; ++b)
    for (int a = 1; a <= side; ++a) {
      const cplx c(x0 + a * sx, y0 + b * sy);
      if (!d.contains(c)) continue;
      out.push_back({c, std::min(std::min(sx, sy), 0.8 * d.distance_to_boundary(c))});
    }
  return out;
}

struct WeakResidualReport {
  std::vector<Bump> basis;
  std::vector<double> residual;   // r_m / ||grad psi_m||_2, signed
  std::vector<double> grad_norm;  // ||grad psi_m||_2
  double max_residual = 0.0;
  double boundary_error = 0.0;  // max |u - phi| at samples moved 2h inward
};

struct PoissonProblem {
  DomainSpec domain;
  MatrixField A;
  RealField g;
  BoundaryData phi;
  double solver_tol = 1e-10;
  int basis_size = 25;
  double residual_tol = 1e-2;
  std::uint64_t seed = 1;  // probe sampling
};

namespace detail {

// max over boundary samples of |u(zeta - 2h n) - phi|, n the outward normal.
inline double inward_boundary_error(const std::function<double(cplx)>& u, const DomainSpec& d, const BoundaryData& phi,
                                    double h) {
  const std::size_t m = d.size();
  double e = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const cplx t = d[(k + 1) % m] - d[(k + m - 1) % m];
    const cplx inward = cplx(0.0, 1.0) * t / std::abs(t);
    e = std::max(e, std::abs(u(d[k] + 2.0 * h * inward) - phi[k]));
  }
  return e;
}

}  // namespace detail

/// r_m = int <A grad u, grad psi_m> + int g psi_m by grid quadrature with
/// centred differences for grad u, normalized by ||grad psi_m||_2.
inline WeakResidualReport weak_residual(const RealField& u, const PoissonProblem& p, int basis_size = 25) {
  const Grid& gr = u.grid;
  WeakResidualReport r;
  r.basis = bump_basis(p.domain, basis_size);
  const auto [ux, uy] = gradient(u);
  const RealField gg = extend_outside(p.g, 0.0);
  const double da = gr.cell_area();
  for (const Bump& b : r.basis) {
    double acc = 0.0, gn = 0.0;
    for (int j = 0; j < gr.n(); ++j)
      for (int i = 0; i < gr.n(); ++i) {
        const cplx z = gr.node(i, j);
        if (std::abs(z - b.c) >= b.rho) continue;
        const std::size_t k = gr.index(i, j);
        const auto a = p.A.at(k);
        const cplx dp = b.grad(z);
        const double fx = a[0] * ux.values[k] + a[1] * uy.values[k];
        const double fy = a[2] * ux.values[k] + a[3] * uy.values[k];
        acc += fx * dp.real() + fy * dp.imag() + gg.values[k] * b.value(z);
        gn += std::norm(dp);
      }
    gn = std::sqrt(gn * da);
    r.grad_norm.push_back(gn);
    r.residual.push_back(acc * da / gn);
    r.max_residual = std::max(r.max_residual, std::abs(r.residual.back()));
  }
  r.boundary_error = detail::inward_boundary_error([&](cplx z) { return interpolate_value(u, z); }, p.domain, p.phi,
                                                   gr.spacing());
  return r;
}

struct IdentityReport {
  std::vector<Bump> basis;
  std::vector<double> lhs;     // int <A grad(T o f), grad psi>
  std::vector<double> rhs;     // int J <M^-1 (grad T) o f, grad psi>
  std::vector<double> strong;  // -int J (Lap T) o f psi
  double max_difference = 0.0;  // max |lhs - rhs| / ||grad psi||_2
};

/// Both sides of div[A grad(T o f)] = J (Lap T) o f against the bump basis.
/// grad(T o f) uses centred differences on the grid; grad T and Lap T use
/// small central differences of the callable.
inline IdentityReport divergence_identity_check(const std::function<double(cplx)>& T, const QCMap& map,
                                                const MatrixField& A, const DomainSpec& domain, int basis_size = 25) {
  const Grid& g = map.grid();
  if (!(A.grid() == g)) throw InvalidInput("A and the map must share one grid");
  const auto inside = domain.mask(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!inside[k]) continue;
    if (std::abs(mu_from_A(A.at(k)) - map.mu.values[k]) > 1e-8)
      throw InvalidInput("A and mu are inconsistent: mu_A differs from the map's coefficient");
  }
  IdentityReport r;
  r.basis = bump_basis(domain, basis_size);
  RealField F(g);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) F(i, j) = T(map.f(i, j));
  const auto [Fx, Fy] = gradient(F);
  const double da = g.cell_area();
  for (const Bump& b : r.basis) {
    double l = 0.0, rr = 0.0, st = 0.0, gn = 0.0;
    for (int j = 0; j < g.n(); ++j)
      for (int i = 0; i < g.n(); ++i) {
        const cplx z = g.node(i, j);
        if (std::abs(z - b.c) >= b.rho) continue;
        const std::size_t k = g.index(i, j);
        const cplx dp = b.grad(z);
        const auto a = A.at(k);
        l += (a[0] * Fx.values[k] + a[1] * Fy.values[k]) * dp.real() +
             (a[2] * Fx.values[k] + a[3] * Fy.values[k]) * dp.imag();
        const cplx w = map.f.values[k];
        const double del = 1e-4 * (1.0 + std::abs(w));
        const double Tx = (T(w + del) - T(w - del)) / (2 * del);
        const double Ty = (T(w + cplx(0, del)) - T(w - cplx(0, del))) / (2 * del);
        const double lap = (T(w + del) + T(w - del) + T(w + cplx(0, del)) + T(w - cplx(0, del)) - 4 * T(w)) / (del * del);
        // J M^-1 is the adjugate of M = [[u_x, u_y], [v_x, v_y]].
        const cplx fx = map.f_z.values[k] + map.f_zbar.values[k];
        const cplx fy = cplx(0, 1) * (map.f_z.values[k] - map.f_zbar.values[k]);
        const double ux = fx.real(), uy = fy.real(), vx = fx.imag(), vy = fy.imag();
        rr += (vy * Tx - uy * Ty) * dp.real() + (-vx * Tx + ux * Ty) * dp.imag();
        st -= map.J.values[k] * lap * b.value(z);
        gn += std::norm(dp);
      }
    r.lhs.push_back(l * da);
    r.rhs.push_back(rr * da);
    r.strong.push_back(st * da);
    r.max_difference = std::max(r.max_difference, std::abs(l - rr) * da / std::sqrt(gn * da));
  }
  return r;
}

struct PoissonReport {
  double holder_exponent = 0.0;  // smallest fitted exponent over the entries of A in D
  std::vector<std::pair<double, double>> G_norms;  // (p', discrete L_p' norm)
  double beltrami_map_residual = 0.0;
  WeakResidualReport weak;
  std::vector<std::string> warnings;
};

struct PoissonSolution {
  RealField u;
  QCMap f;
  DomainSpec image_domain;
  RealField G;
  RealField N;
  RealField H_harm;
  std::shared_ptr<const DoubleLayer> layer;
  PoissonReport report;
};

/// u at an interior point of D.
inline double evaluate(const PoissonSolution& s, cplx z) {
  const cplx w = s.f(z);
  return (*s.layer)(w) + interpolate_value(s.N, w);
}

inline void validate(const PoissonProblem& p) {
  const Grid& g = p.g.grid;
  if (!(p.A.grid() == g)) throw InvalidInput("A and g must share one grid");
  if (p.phi.size() != p.domain.size()) throw InvalidInput("boundary data size does not match the domain sample");
  const double L = g.half_width();
  for (const cplx& z : p.domain.boundary()) {
    const cplx d = z - g.center();
    if (std::abs(d.real()) > 0.9 * L || std::abs(d.imag()) > 0.9 * L)
      throw InvalidInput("domain must lie inside 0.9 of the grid box (compact-support margin)");
  }
  const auto inside = p.domain.mask(g);
  check_matrix(p.A, &inside);
  const double margin = 0.05 * p.domain.diameter();
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      if (!p.g.active(i, j) || p.g(i, j) == 0.0) continue;
      const cplx z = g.node(i, j);
      if (!p.domain.contains(z) || p.domain.distance_to_boundary(z) < margin) {
        std::ostringstream os;
        os << "g must have compact support in D at distance >= 0.05 diam(D) from the boundary; node (" << i << ", "
           << j << ") violates the compact-support margin";
        throw InvalidInput(os.str());
      }
    }
}

/// Full pipeline u = (H + N^G) o f; failures carry the stage name.
inline PoissonSolution solve_poisson(const PoissonProblem& p) {
  detail::run_stage("validate", [&] {
    validate(p);
    return 0;
  });
  PoissonSolution s;
  const Grid& g = p.g.grid;
  const auto inside = p.domain.mask(g);

  ComplexField mu = detail::run_stage("mu_from_A", [&] { return mu_from_A(p.A, &inside); });
  s.report.holder_exponent = 1.0;
  for (const RealField* e : {&p.A.a11, &p.A.a12, &p.A.a22}) {
    RealField in = *e;
    in.mask = inside;
    s.report.holder_exponent = std::min(s.report.holder_exponent, verify_regularity(in, std::numeric_limits<double>::infinity()).exponent);
  }
  if (s.report.holder_exponent < 0.05)
    s.report.warnings.push_back("entries of A look discontinuous (fitted Holder exponent below 0.05)");

  detail::run_stage("qc_map", [&] {
    QCSolveOptions o;
    o.tol = p.solver_tol;
    s.f = solve_mu_conformal(mu, o);
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

  s.G = detail::run_stage("pushforward", [&] { return pushforward_density(p.g, s.f, gs); });
  for (double q : {1.5, 2.0, 4.0}) s.report.G_norms.emplace_back(q, lq_norm(s.G, q));
  s.N = detail::run_stage("potential", [&] { return log_potential(s.G); });
  const BoundaryData phi_star = detail::run_stage("transfer_boundary", [&] {
    std::vector<double> out(p.domain.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = p.phi[k] - interpolate_value(s.N, s.image_domain[k]);
    return BoundaryData(std::move(out));
  });
  HarmonicSolution hs = detail::run_stage("harmonic", [&] {
    return solve_dirichlet_harmonic(s.image_domain, phi_star, gs);
  });
  s.layer = hs.layer;
  s.H_harm = std::move(hs.u);

  detail::run_stage("compose", [&] {
    s.u = RealField(g, 0.0);
    s.u.mask = inside;
    for (int j = 0; j < g.n(); ++j)
      for (int i = 0; i < g.n(); ++i) {
        if (!inside[g.index(i, j)]) continue;
        const cplx w = s.f.f(i, j);
        s.u(i, j) = (*s.layer)(w) + interpolate_value(s.N, w);
      }
    return 0;
  });
  s.report.weak = weak_residual(s.u, p, p.basis_size);
  if (s.report.weak.max_residual > p.residual_tol) s.report.warnings.push_back("weak residual above tolerance");
  return s;
}

}  // namespace qcdir
