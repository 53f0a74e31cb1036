#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "qcdir/domain.hpp"
#include "qcdir/error.hpp"
#include "qcdir/grid.hpp"
#include "qcdir/singular_integrals.hpp"

namespace qcdir {

enum class QCMethod { automatic, fixed_point, gmres };

struct QCSolveOptions {
  double tol = 1e-10;
  int max_iterations = 2000;
  QCMethod method = QCMethod::automatic;
  int restart = 40;                      // GMRES Krylov dimension
  double gmres_threshold = 0.5;          // automatic: GMRES when k_max exceeds this
  const ComplexField* initial = nullptr;  // warm start for h
};

class InverseIndex;

/// Numerical mu-conformal map of the plane, f(z) = z + C[h](z) with h = f_zbar.
struct QCMap {
  ComplexField mu;
  ComplexField h;  // = f_zbar
  ComplexField f;
  ComplexField f_z;
  ComplexField f_zbar;
  RealField J;
  int iterations = 0;
  double k_max = 0.0;
  double solver_residual = 0.0;    // L2 residual of h - mu B h - mu
  double beltrami_residual = 0.0;  // ||f_zbar - mu f_z||_2 / ||1 + |f_z|||_2
  std::shared_ptr<const InverseIndex> inverse;

  const Grid& grid() const { return f.grid; }
  cplx operator()(cplx z) const { return interpolate_value(f, z); }
};

namespace detail {

using Vec = std::vector<cplx>;

inline double vnorm(const Vec& v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return std::sqrt(s);
}

inline cplx vdot(const Vec& a, const Vec& b) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
  return s;
}

// Restarted GMRES for the complex-linear system op(x) = b. Returns the
// number of operator applications; `x` holds the initial guess on entry.
inline int gmres(const std::function<void(const Vec&, Vec&)>& op, const Vec& b, Vec& x, double tol,
                 int restart, int max_apply, double& residual) {
  const std::size_t N = b.size();
  Vec r(N), w(N);
  int applied = 0;
  const double bnorm = std::max(vnorm(b), 1e-300);
  for (;;) {
    op(x, w);
    ++applied;
    for (std::size_t k = 0; k < N; ++k) r[k] = b[k] - w[k];
    double beta = vnorm(r);
    residual = beta;
    if (beta <= tol * bnorm || applied >= max_apply) return applied;
    const int m = restart;
    std::vector<Vec> V(1, Vec(N));
    for (std::size_t k = 0; k < N; ++k) V[0][k] = r[k] / beta;
    std::vector<std::vector<cplx>> H(m + 1, std::vector<cplx>(m, 0.0));
    std::vector<cplx> cs(m), sn(m), g(m + 1, 0.0);
    g[0] = beta;
    int used = 0;
    for (int j = 0; j < m && applied < max_apply; ++j) {
      op(V[j], w);
      ++applied;
      for (int i = 0; i <= j; ++i) {
        H[i][j] = vdot(V[i], w);
        for (std::size_t k = 0; k < N; ++k) w[k] -= H[i][j] * V[i][k];
      }
      const double hn = vnorm(w);
      H[j + 1][j] = hn;
      for (int i = 0; i < j; ++i) {
        const cplx t = std::conj(cs[i]) * H[i][j] + std::conj(sn[i]) * H[i + 1][j];
        H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
        H[i][j] = t;
      }
      const double den = std::hypot(std::abs(H[j][j]), hn);
      cs[j] = den > 0 ? H[j][j] / den : cplx(1.0);
      sn[j] = den > 0 ? cplx(hn / den) : cplx(0.0);
      H[j][j] = den;
      H[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      used = j + 1;
      residual = std::abs(g[j + 1]);
      if (residual <= tol * bnorm || hn == 0.0) break;
      V.emplace_back(N);
      for (std::size_t k = 0; k < N; ++k) V[j + 1][k] = w[k] / hn;
    }
    std::vector<cplx> y(used);
    for (int i = used - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int k = i + 1; k < used; ++k) s -= H[i][k] * y[k];
      y[i] = s / H[i][i];
    }
    for (int i = 0; i < used; ++i)
      for (std::size_t k = 0; k < N; ++k) x[k] += y[i] * V[i][k];
  }
}

}  // namespace detail

/// Bucketed triangulation of the image of the grid cells under f, used to
/// seed Newton inversion.
class InverseIndex {
 public:
  explicit InverseIndex(const ComplexField& f) : f_(f), n_(f.grid.n()) {
    lo_ = hi_ = f.values[0];
    for (const cplx& w : f.values) {
      lo_ = {std::min(lo_.real(), w.real()), std::min(lo_.imag(), w.imag())};
      hi_ = {std::max(hi_.real(), w.real()), std::max(hi_.imag(), w.imag())};
    }
    nb_ = n_;
    const double span = std::max(hi_.real() - lo_.real(), hi_.imag() - lo_.imag());
    cell_ = span / nb_ * (1.0 + 1e-12);
    start_.assign(static_cast<std::size_t>(nb_) * nb_ + 1, 0);
    const int tri = 2 * (n_ - 1) * (n_ - 1);
    for (int pass = 0; pass < 2; ++pass) {
      if (pass == 1) {
        for (std::size_t k = 1; k < start_.size(); ++k) start_[k] += start_[k - 1];
        items_.resize(start_.back());
        fill_ = std::vector<std::uint32_t>(start_.begin(), start_.end() - 1);
      }
      for (int t = 0; t < tri; ++t) {
        cplx a, b, c;
        vertices(t, a, b, c);
        const int bx0 = bucket(std::min({a.real(), b.real(), c.real()}) - lo_.real());
        const int bx1 = bucket(std::max({a.real(), b.real(), c.real()}) - lo_.real());
        const int by0 = bucket(std::min({a.imag(), b.imag(), c.imag()}) - lo_.imag());
        const int by1 = bucket(std::max({a.imag(), b.imag(), c.imag()}) - lo_.imag());
        for (int by = by0; by <= by1; ++by)
          for (int bx = bx0; bx <= bx1; ++bx) {
            const std::size_t k = static_cast<std::size_t>(by) * nb_ + bx;
            if (pass == 0)
              ++start_[k + 1];
            else
              items_[fill_[k]++] = static_cast<std::uint32_t>(t);
          }
      }
    }
    fill_.clear();
  }

  /// Preimage seed of w by barycentric interpolation in a containing triangle.
  std::optional<cplx> seed(cplx w) const {
    if (w.real() < lo_.real() || w.imag() < lo_.imag() || w.real() > hi_.real() || w.imag() > hi_.imag())
      return std::nullopt;
    const int bx = bucket(w.real() - lo_.real()), by = bucket(w.imag() - lo_.imag());
    const std::size_t k = static_cast<std::size_t>(by) * nb_ + bx;
    std::optional<cplx> best;
    double best_slack = -1e300;
    for (std::uint32_t s = start_[k]; s < start_[k + 1]; ++s) {
      const int t = static_cast<int>(items_[s]);
      cplx a, b, c;
      vertices(t, a, b, c);
      const double area = cross(b - a, c - a);
      if (area == 0.0) continue;
      const double l1 = cross(c - b, w - b) / area;
      const double l2 = cross(a - c, w - c) / area;
      const double l3 = 1.0 - l1 - l2;
      const double slack = std::min({l1, l2, l3});
      if (slack > best_slack) {
        cplx za, zb, zc;
        preimages(t, za, zb, zc);
        best_slack = slack;
        best = l1 * za + l2 * zb + l3 * zc;
      }
    }
    if (best_slack < -1e-6) return std::nullopt;
    return best;
  }

 private:
  static double cross(cplx u, cplx v) { return u.real() * v.imag() - u.imag() * v.real(); }

  int bucket(double d) const { return std::clamp(static_cast<int>(d / cell_), 0, nb_ - 1); }

  void corners(int t, int (&ii)[3], int (&jj)[3]) const {
    const int cell = t / 2, s = t % 2;
    const int i = cell % (n_ - 1), j = cell / (n_ - 1);
    if (s == 0) {
      ii[0] = i, jj[0] = j, ii[1] = i + 1, jj[1] = j, ii[2] = i + 1, jj[2] = j + 1;
    } else {
      ii[0] = i, jj[0] = j, ii[1] = i + 1, jj[1] = j + 1, ii[2] = i, jj[2] = j + 1;
    }
  }
  void vertices(int t, cplx& a, cplx& b, cplx& c) const {
    int ii[3], jj[3];
    corners(t, ii, jj);
    a = f_(ii[0], jj[0]), b = f_(ii[1], jj[1]), c = f_(ii[2], jj[2]);
  }
  void preimages(int t, cplx& a, cplx& b, cplx& c) const {
    int ii[3], jj[3];
    corners(t, ii, jj);
    const Grid& g = f_.grid;
    a = g.node(ii[0], jj[0]), b = g.node(ii[1], jj[1]), c = g.node(ii[2], jj[2]);
  }

  ComplexField f_;  // own copy: QCMap values move independently
  int n_;
  int nb_ = 0;
  double cell_ = 1.0;
  cplx lo_, hi_;
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> items_;
  std::vector<std::uint32_t> fill_;
};

namespace detail {

inline void finish_map(QCMap& m) {
  const Grid& g = m.mu.grid;
  ComplexField bh = beurling_transform(m.h, false);
  ComplexField ch = cauchy_transform(m.h);
  m.f = ComplexField(g);
  m.f_z = ComplexField(g);
  m.f_zbar = m.h;
  m.J = RealField(g);
  double num = 0.0, den = 0.0, res = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int i = static_cast<int>(k % g.n()), j = static_cast<int>(k / g.n());
    m.f.values[k] = g.node(i, j) + ch.values[k];
    m.f_z.values[k] = 1.0 + bh.values[k];
    m.J.values[k] = std::norm(m.f_z.values[k]) - std::norm(m.h.values[k]);
    num += std::norm(m.h.values[k] - m.mu.values[k] * m.f_z.values[k]);
    den += std::pow(1.0 + std::abs(m.f_z.values[k]), 2);
    res += std::norm(m.h.values[k] - m.mu.values[k] * m.f_z.values[k]);
  }
  m.beltrami_residual = std::sqrt(num / den);
  m.solver_residual = std::sqrt(res * g.cell_area());
  m.inverse = std::make_shared<InverseIndex>(m.f);
}

}  // namespace detail

/// Solves h = mu B(h) + mu and sets f = z + C(h), f_z = 1 + B(h), f_zbar = h.
/// mu must be zero outside 0.9 of the grid box and satisfy |mu| < 1.
inline QCMap solve_mu_conformal(const ComplexField& mu_in, const QCSolveOptions& opt = {}) {
  const Grid& g = mu_in.grid;
  QCMap m;
  m.mu = extend_outside(mu_in, cplx(0.0));
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const double a = std::abs(m.mu(i, j));
      if (!std::isfinite(a) || a >= 1.0) {
        std::ostringstream os;
        os << "non-contraction: |mu| = " << a << " >= 1 at node (" << i << ", " << j << ")";
        throw InvalidInput(os.str());
      }
      m.k_max = std::max(m.k_max, a);
    }
  detail::require_margin(m.mu, "solve_mu_conformal");

  const std::size_t N = g.size();
  const double w = std::sqrt(g.cell_area());
  m.h = opt.initial ? *opt.initial : m.mu;
  for (std::size_t k = 0; k < N; ++k)
    if (m.mu.values[k] == cplx(0.0)) m.h.values[k] = 0.0;

  if (m.k_max == 0.0) {
    m.h = ComplexField(g, 0.0);
  } else if (opt.method == QCMethod::fixed_point ||
             (opt.method == QCMethod::automatic && m.k_max <= opt.gmres_threshold)) {
    double prev = std::numeric_limits<double>::infinity();
    int growth = 0;
    for (;;) {
      ComplexField bh = beurling_transform(m.h, false);
      double diff = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        const cplx next = m.mu.values[k] * (bh.values[k] + 1.0);
        diff += std::norm(next - m.h.values[k]);
        m.h.values[k] = next;
      }
      diff = std::sqrt(diff) * w;
      ++m.iterations;
      if (diff < opt.tol) break;
      growth = diff > prev ? growth + 1 : 0;
      if (growth >= 5) throw NonConvergence("non-contraction: fixed-point increments grow");
      if (m.iterations >= opt.max_iterations) {
        std::ostringstream os;
        os << "fixed-point iteration cap " << opt.max_iterations << " exceeded, increment " << diff;
        throw NonConvergence(os.str());
      }
      prev = diff;
    }
  } else {
    ComplexField tmp(g);
    auto op = [&](const detail::Vec& x, detail::Vec& y) {
      tmp.values = x;
      ComplexField bx = beurling_transform(tmp, false);
      y.resize(N);
      for (std::size_t k = 0; k < N; ++k) y[k] = x[k] - m.mu.values[k] * bx.values[k];
    };
    detail::Vec x = m.h.values;
    double res = 0.0;
    const double bnorm = l2_norm(m.mu);
    m.iterations = detail::gmres(op, m.mu.values, x, opt.tol / std::max(bnorm, 1e-300), opt.restart,
                                 opt.max_iterations, res);
    if (res * w > opt.tol) {
      std::ostringstream os;
      os << "GMRES iteration cap " << opt.max_iterations << " exceeded, residual " << res * w;
      throw NonConvergence(os.str());
    }
    m.h.values = std::move(x);
  }
  detail::finish_map(m);
  return m;
}

inline QCMap solve_mu_conformal(const ComplexField& mu, double tol) {
  QCSolveOptions o;
  o.tol = tol;
  return solve_mu_conformal(mu, o);
}

struct InversionOptions {
  double tol_factor = 1e-9;  // times the grid half-width
  int max_steps = 50;
};

/// z with |f(z) - w| <= tol, seeded from the triangulated image and refined by
/// damped Newton on the interpolated map.
inline cplx invert(const QCMap& map, cplx w, const InversionOptions& opt = {}) {
  const double tol = opt.tol_factor * map.grid().half_width();
  auto seed = map.inverse->seed(w);
  if (!seed) {
    std::ostringstream os;
    os << "point " << w << " lies outside the numerical image f(D)";
    throw InvalidInput(os.str());
  }
  cplx z = *seed;
  auto eval = interpolate(map.f, z);
  cplx r = w - eval.value;
  for (int step = 0; step < opt.max_steps; ++step) {
    if (std::abs(r) <= tol) return z;
    const cplx fz = 0.5 * (eval.dx - cplx(0, 1) * eval.dy);
    const cplx fzb = 0.5 * (eval.dx + cplx(0, 1) * eval.dy);
    const double J = std::norm(fz) - std::norm(fzb);
    if (!(J > 0)) break;
    const cplx delta = (std::conj(fz) * r - fzb * std::conj(r)) / J;
    double t = 1.0;
    bool improved = false;
    for (int half = 0; half < 30; ++half, t *= 0.5) {
      const cplx zt = z + t * delta;
      auto et = interpolate(map.f, zt);
      const cplx rt = w - et.value;
      if (std::abs(rt) < std::abs(r)) {
        z = zt, eval = et, r = rt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (std::abs(r) <= tol) return z;
  std::ostringstream os;
  os << "Newton inversion did not converge at w = " << w << ", residual " << std::abs(r);
  throw NonConvergence(os.str());
}

/// Checks a random sample of grid cells: both triangles of each sampled cell
/// and of its neighbours map with positive orientation, and the image of the
/// cell centre is covered by exactly one of those image triangles.
inline bool homeomorphism_probe(const QCMap& map, double fraction, std::uint64_t seed) {
  const Grid& g = map.grid();
  const int n = g.n();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(2, n - 4);
  const int samples = std::max(1, static_cast<int>(fraction * (n - 1) * (n - 1)));
  auto cross = [](cplx u, cplx v) { return u.real() * v.imag() - u.imag() * v.real(); };
  for (int s = 0; s < samples; ++s) {
    const int i = pick(rng), j = pick(rng);
    const cplx c = map(g.node(i, j) + cplx(0.5 * g.spacing(), 0.5 * g.spacing()));
    int covering = 0;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int a = i + di, b = j + dj;
        const cplx p00 = map.f(a, b), p10 = map.f(a + 1, b), p11 = map.f(a + 1, b + 1), p01 = map.f(a, b + 1);
        const cplx tris[2][3] = {{p00, p10, p11}, {p00, p11, p01}};
        for (const auto& t : tris) {
          const double area = cross(t[1] - t[0], t[2] - t[0]);
          if (!(area > 0)) return false;
          const double l1 = cross(t[2] - t[1], c - t[1]) / area;
          const double l2 = cross(t[0] - t[2], c - t[2]) / area;
          if (l1 >= 0 && l2 >= 0 && 1 - l1 - l2 >= 0) ++covering;
        }
      }
    if (covering < 1 || covering > 2) return false;  // 2 only on a shared diagonal
  }
  return true;
}

/// Sequence of solves with mu clipped to K <= cap for increasing caps.
struct TruncationLadder {
  std::vector<double> levels;
  std::vector<QCMap> maps;
  std::vector<double> convergence_trace;  // distance between maps k and k+1
  bool converged = false;
  int final_index = -1;  // level whose map is the reported solution
};

/// mu rescaled so that K_mu <= cap, argument preserved.
inline ComplexField clip_mu(const ComplexField& mu, double cap) {
  const double kcap = (cap - 1.0) / (cap + 1.0);
  ComplexField out = mu;
  for (cplx& v : out.values) {
    const double a = std::abs(v);
    if (a > kcap) v *= kcap / a;
  }
  return out;
}

/// Nodes at distance >= 0.1 diam(D) from the boundary of D.
inline std::vector<cplx> probe_compact(const Grid& g, const DomainSpec& domain) {
  const double min_dist = 0.1 * domain.diameter();
  const auto inside = domain.mask(g);
  std::vector<cplx> pts;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i)
      if (inside[g.index(i, j)] && domain.distance_to_boundary(g.node(i, j)) >= min_dist)
        pts.push_back(g.node(i, j));
  return pts;
}

/// sup |f_a - f_b| over the probe nodes, divided by the diameter of f_b(probe).
inline double map_distance(const QCMap& a, const QCMap& b, const std::vector<cplx>& probe) {
  const Grid& g = a.grid();
  double sup = 0.0;
  std::vector<cplx> img;
  img.reserve(probe.size());
  for (const cplx& z : probe) {
    const int i = static_cast<int>(std::lround(g.fi(z))), j = static_cast<int>(std::lround(g.fj(z)));
    sup = std::max(sup, std::abs(a.f(i, j) - b.f(i, j)));
    img.push_back(b.f(i, j));
  }
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const cplx& w : img) {
    lo_x = std::min(lo_x, w.real()), hi_x = std::max(hi_x, w.real());
    lo_y = std::min(lo_y, w.imag()), hi_y = std::max(hi_y, w.imag());
  }
  const double diam = std::hypot(hi_x - lo_x, hi_y - lo_y);
  return diam > 0 ? sup / diam : std::numeric_limits<double>::infinity();
}

inline std::vector<double> default_caps(int count = 6) {
  std::vector<double> caps;
  for (int k = 1; k <= count; ++k) caps.push_back(std::ldexp(1.0, k));
  return caps;
}

/// Truncation ladder for mu with |mu| < 1 but K_mu unbounded near the boundary
/// of `domain`. Each level is warm-started from the previous one. Convergence
/// is declared at the first level whose distance to its predecessor is < tol;
/// otherwise the full trace is returned with converged = false.
inline TruncationLadder solve_degenerate(const ComplexField& mu, const DomainSpec& domain,
                                         std::vector<double> caps, double tol,
                                         QCSolveOptions opt = {}) {
  if (caps.empty()) throw InvalidInput("truncation ladder needs at least one cap");
  for (std::size_t k = 0; k < caps.size(); ++k)
    if (!(caps[k] > 1.0) || (k > 0 && !(caps[k] > caps[k - 1])))
      throw InvalidInput("ladder caps must be increasing and > 1");
  for (const cplx& v : mu.values)
    if (!(std::abs(v) < 1.0)) throw InvalidInput("solve_degenerate requires |mu| < 1 pointwise");
  const auto probe = probe_compact(mu.grid, domain);
  if (probe.empty()) throw InvalidInput("probe compact is empty at this resolution");

  TruncationLadder L;
  opt.initial = nullptr;
  for (std::size_t k = 0; k < caps.size(); ++k) {
    L.levels.push_back(caps[k]);
    if (k > 0) opt.initial = &L.maps.back().h;
    QCMap m = solve_mu_conformal(clip_mu(mu, caps[k]), opt);
    L.maps.push_back(std::move(m));
    L.final_index = static_cast<int>(k);
    if (k > 0) {
      const double d = map_distance(L.maps[k], L.maps[k - 1], probe);
      L.convergence_trace.push_back(d);
      if (d < tol) {
        L.converged = true;
        break;
      }
    } else if (mu.values == L.maps[0].mu.values) {
      // Nothing was clipped: the first level is already the solution.
      L.convergence_trace.push_back(0.0);
      L.converged = true;
      break;
    }
  }
  return L;
}

}  // namespace qcdir
