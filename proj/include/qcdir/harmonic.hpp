#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "qcdir/domain.hpp"
#include "qcdir/error.hpp"
#include "qcdir/fft.hpp"
#include "qcdir/grid.hpp"

namespace qcdir {

namespace detail {

inline double wavenumber(int k, int m) { return k <= m / 2 ? k : k - m; }

// Derivatives of the periodic sample z(t_k), t_k = 2 pi k / m, by spectral
// differentiation; the Nyquist mode is dropped.
inline void periodic_derivatives(const std::vector<cplx>& z, std::vector<cplx>& d1, std::vector<cplx>& d2) {
  const int m = static_cast<int>(z.size());
  std::vector<cplx> c = z;
  fft::dft1(c, -1);
  std::vector<cplx> a(m), b(m);
  for (int k = 0; k < m; ++k) {
    const double w = wavenumber(k, m);
    const bool nyq = (m % 2 == 0 && k == m / 2);
    a[k] = nyq ? cplx(0.0) : c[k] * cplx(0.0, w) / static_cast<double>(m);
    b[k] = nyq ? cplx(0.0) : -c[k] * (w * w) / static_cast<double>(m);
  }
  fft::dft1(a, +1);
  fft::dft1(b, +1);
  d1 = std::move(a);
  d2 = std::move(b);
}

// Trigonometric interpolation of a periodic sample onto factor * m points.
inline std::vector<cplx> periodic_upsample(const std::vector<cplx>& v, int factor) {
  const int m = static_cast<int>(v.size()), M = factor * m;
  std::vector<cplx> c = v;
  fft::dft1(c, -1);
  std::vector<cplx> out(M, 0.0);
  for (int k = 0; k < m; ++k) {
    const cplx ck = c[k] / static_cast<double>(m);
    if (m % 2 == 0 && k == m / 2) {
      out[m / 2] += 0.5 * ck;
      out[M - m / 2] += 0.5 * ck;
    } else {
      const int w = static_cast<int>(wavenumber(k, m));
      out[w >= 0 ? w : M + w] += ck;
    }
  }
  fft::dft1(out, +1);
  return out;
}

}  // namespace detail

/// Double-layer potential u(w) = (1/2pi) int tau Im(zeta'/(zeta - w)) dt whose
/// density solves the second-kind equation tau/2 + K tau = phi (Nystrom,
/// trapezoidal rule in the sample parameter).
class DoubleLayer {
 public:
  DoubleLayer(const DomainSpec& domain, const BoundaryData& phi, int upsample = 8)
      : z_(domain.boundary()), spacing_(domain.mean_spacing()) {
    const int m = static_cast<int>(z_.size());
    if (static_cast<int>(phi.size()) != m)
      throw InvalidInput("boundary data has " + std::to_string(phi.size()) + " values for " +
                         std::to_string(m) + " boundary samples");
    std::vector<cplx> d2;
    detail::periodic_derivatives(z_, dz_, d2);
    Eigen::MatrixXd A(m, m);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        const double kern = (j == k) ? (d2[j] / (2.0 * dz_[j])).imag() : (dz_[k] / (z_[k] - z_[j])).imag();
        A(j, k) = kern / m + (j == k ? 0.5 : 0.0);
      }
    Eigen::VectorXd rhs(m);
    for (int j = 0; j < m; ++j) rhs(j) = phi[j];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd tau = lu.solve(rhs);
    if (!tau.allFinite()) throw NonConvergence("double-layer system is singular");
    tau_.assign(tau.data(), tau.data() + m);

    std::vector<cplx> tc(tau_.begin(), tau_.end());
    zf_ = detail::periodic_upsample(z_, upsample);
    auto tf = detail::periodic_upsample(tc, upsample);
    tauf_.resize(tf.size());
    for (std::size_t k = 0; k < tf.size(); ++k) tauf_[k] = tf[k].real();
    std::vector<cplx> d2f;
    detail::periodic_derivatives(zf_, dzf_, d2f);
  }

  const std::vector<double>& density() const { return tau_; }
  double boundary_spacing() const { return spacing_; }

  /// Distance from w to the nearest boundary sample.
  double sample_distance(cplx w) const {
    double d = std::numeric_limits<double>::infinity();
    for (const cplx& z : z_) d = std::min(d, std::abs(z - w));
    return d;
  }

  /// Value at an interior point. Within 6 boundary spacings the refined rule
  /// (upsampled density, singularity subtraction) is used; `near` reports
  /// points within 2 spacings, where accuracy degrades.
  double operator()(cplx w, bool* near = nullptr) const {
    const int m = static_cast<int>(z_.size());
    double s = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      const cplx d = z_[k] - w;
      dmin = std::min(dmin, std::norm(d));
      s += tau_[k] * (dz_[k] / d).imag();
    }
    dmin = std::sqrt(dmin);
    if (near) *near = dmin < 2.0 * spacing_;
    if (dmin >= 6.0 * spacing_) return s / m;
    const int M = static_cast<int>(zf_.size());
    int kstar = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < M; ++k) {
      const double d = std::norm(zf_[k] - w);
      if (d < best) best = d, kstar = k;
    }
    if (best == 0.0) return tauf_[kstar];
    const double ts = tauf_[kstar];
    double t = 0.0;
    for (int k = 0; k < M; ++k) t += (tauf_[k] - ts) * (dzf_[k] / (zf_[k] - w)).imag();
    return ts + t / M;
  }

 private:
  std::vector<cplx> z_, dz_;
  std::vector<double> tau_;
  std::vector<cplx> zf_, dzf_;
  std::vector<double> tauf_;
  double spacing_;
};

struct HarmonicSolution {
  RealField u;                       // masked to the strict interior of the domain
  std::vector<std::uint8_t> flagged;  // interior nodes evaluated by the near-boundary rule
  std::shared_ptr<const DoubleLayer> layer;
};

/// Harmonic function in the domain with boundary values phi, sampled on the
/// interior nodes of `grid`.
inline HarmonicSolution solve_dirichlet_harmonic(const DomainSpec& domain, const BoundaryData& phi,
                                                 const Grid& grid) {
  HarmonicSolution s;
  s.layer = std::make_shared<DoubleLayer>(domain, phi);
  s.u = RealField(grid, 0.0);
  s.u.mask = domain.mask(grid);
  s.flagged.assign(grid.size(), 0);
  for (int j = 0; j < grid.n(); ++j)
    for (int i = 0; i < grid.n(); ++i) {
      const std::size_t k = grid.index(i, j);
      if (!(*s.u.mask)[k]) continue;
      bool near = false;
      s.u.values[k] = (*s.layer)(grid.node(i, j), &near);
      s.flagged[k] = near ? 1 : 0;
    }
  return s;
}

namespace detail {

// Partial derivative restricted to active nodes: centered when possible, else
// one-sided (second order when two neighbours are available).
inline double masked_partial(const RealField& u, int i, int j, int axis) {
  const int n = u.grid.n();
  const double h = u.grid.spacing();
  auto ok = [&](int k) {
    const int a = axis == 0 ? k : i, b = axis == 0 ? j : k;
    return k >= 0 && k < n && u.active(a, b);
  };
  auto at = [&](int k) { return axis == 0 ? u(k, j) : u(i, k); };
  const int c = axis == 0 ? i : j;
  if (ok(c - 1) && ok(c + 1)) return (at(c + 1) - at(c - 1)) / (2 * h);
  if (ok(c + 1) && ok(c + 2)) return (-3 * at(c) + 4 * at(c + 1) - at(c + 2)) / (2 * h);
  if (ok(c - 1) && ok(c - 2)) return (3 * at(c) - 4 * at(c - 1) + at(c - 2)) / (2 * h);
  if (ok(c + 1)) return (at(c + 1) - at(c)) / h;
  if (ok(c - 1)) return (at(c) - at(c - 1)) / h;
  return 0.0;
}

}  // namespace detail

struct ConjugateResult {
  RealField v;
  double loop_residual = 0.0;  // max |closed-loop integral| over the sampled loops
  bool loop_ok = true;
};

/// Harmonic conjugate by integrating (-u_y, u_x) along grid edges of a
/// breadth-first spanning tree rooted at the node nearest `anchor`, then
/// shifting so that v(anchor) = 0. Loop residuals are measured on `loops`
/// random interior rectangles.
inline ConjugateResult harmonic_conjugate(const RealField& u_in, const DomainSpec& domain, cplx anchor,
                                          double loop_tol = 1e-3, int loops = 10, std::uint64_t seed = 1) {
  const Grid& g = u_in.grid;
  const int n = g.n();
  const double h = g.spacing();
  RealField u = u_in;
  if (!u.mask) u.mask = domain.mask(g);
  if (!domain.contains(anchor)) throw InvalidInput("conjugate anchor lies outside the domain");

  RealField ux(g), uy(g);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (u.active(i, j)) {
        ux(i, j) = detail::masked_partial(u, i, j, 0);
        uy(i, j) = detail::masked_partial(u, i, j, 1);
      }

  ConjugateResult r;
  r.v = RealField(g, 0.0);
  std::vector<std::uint8_t> seen(g.size(), 0);
  int ai = std::clamp(static_cast<int>(std::lround(g.fi(anchor))), 0, n - 1);
  int aj = std::clamp(static_cast<int>(std::lround(g.fj(anchor))), 0, n - 1);
  if (!u.active(ai, aj)) {
    double best = 1e300;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (u.active(i, j) && std::abs(g.node(i, j) - anchor) < best) best = std::abs(g.node(i, j) - anchor), ai = i, aj = j;
    if (best == 1e300) throw InvalidInput("no active node for the conjugate");
  }
  std::deque<std::pair<int, int>> queue{{ai, aj}};
  seen[g.index(ai, aj)] = 1;
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    auto [i, j] = queue.front();
    queue.pop_front();
    for (int e = 0; e < 4; ++e) {
      const int p = i + di[e], q = j + dj[e];
      if (p < 0 || q < 0 || p >= n || q >= n || !u.active(p, q) || seen[g.index(p, q)]) continue;
      // dv = -u_y dx + u_x dy, trapezoid along the edge.
      const double dv = di[e] != 0 ? -0.5 * (uy(i, j) + uy(p, q)) * di[e] * h : 0.5 * (ux(i, j) + ux(p, q)) * dj[e] * h;
      r.v(p, q) = r.v(i, j) + dv;
      seen[g.index(p, q)] = 1;
      queue.emplace_back(p, q);
    }
  }
  r.v.mask = seen;
  const double shift = interpolate_value(r.v, anchor);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (seen[k]) r.v.values[k] -= shift;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1), size(2, std::max(2, n / 8));
  int done = 0;
  for (int attempt = 0; attempt < 2000 && done < loops; ++attempt) {
    const int i0 = pick(rng), j0 = pick(rng), a = size(rng), b = size(rng);
    if (i0 + a >= n || j0 + b >= n) continue;
    bool inside = true;
    for (int t = 0; t <= a && inside; ++t) inside = seen[g.index(i0 + t, j0)] && seen[g.index(i0 + t, j0 + b)];
    for (int t = 0; t <= b && inside; ++t) inside = seen[g.index(i0, j0 + t)] && seen[g.index(i0 + a, j0 + t)];
    if (!inside) continue;
    double c = 0.0;
    for (int t = 0; t < a; ++t) {
      c += -0.5 * (uy(i0 + t, j0) + uy(i0 + t + 1, j0)) * h;
      c -= -0.5 * (uy(i0 + t, j0 + b) + uy(i0 + t + 1, j0 + b)) * h;
    }
    for (int t = 0; t < b; ++t) {
      c += 0.5 * (ux(i0 + a, j0 + t) + ux(i0 + a, j0 + t + 1)) * h;
      c -= 0.5 * (ux(i0, j0 + t) + ux(i0, j0 + t + 1)) * h;
    }
    r.loop_residual = std::max(r.loop_residual, std::abs(c));
    ++done;
  }
  r.loop_ok = r.loop_residual <= loop_tol;
  return r;
}

}  // namespace qcdir
