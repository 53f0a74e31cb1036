#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "qcdir/calculus.hpp"
#include "qcdir/fft.hpp"
#include "qcdir/grid.hpp"

namespace qcdir {

// Cauchy transform, Beurling transform and logarithmic potential of grid
// sources. The two convolutions run on a 2x zero-padded grid (no wraparound)
// with the kernel replaced by its exact or Gauss-quadrature cell average near
// the singularity; the Beurling transform is the Fourier multiplier
// conj(xi)/xi on the padded spectrum.

enum class KernelKind { cauchy, log_potential };

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1], 6 points.
inline constexpr std::array<double, 6> kGl6x{-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                                             0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
inline constexpr std::array<double, 6> kGl6w{0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                                             0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

inline cplx kernel_point(KernelKind kind, cplx z) {
  if (kind == KernelKind::cauchy) return 1.0 / (kPi * z);
  return std::log(std::abs(z)) / (2.0 * kPi);
}

// Average of the kernel over the h x h cell centred at c (c != 0), by a
// composite 4x4 sub-cell, 6x6 Gauss rule.
inline cplx kernel_cell_average(KernelKind kind, cplx c, double h) {
  constexpr int sub = 4;
  const double hs = h / sub;
  cplx acc = 0.0;
  for (int sj = 0; sj < sub; ++sj)
    for (int si = 0; si < sub; ++si) {
      const cplx sc = c + cplx(-0.5 * h + (si + 0.5) * hs, -0.5 * h + (sj + 0.5) * hs);
      for (int b = 0; b < 6; ++b)
        for (int a = 0; a < 6; ++a)
          acc += kGl6w[a] * kGl6w[b] *
                 kernel_point(kind, sc + cplx(0.5 * hs * kGl6x[a], 0.5 * hs * kGl6x[b]));
    }
  return acc / (4.0 * sub * sub);
}

// Exact average over the cell centred at the singularity. The Cauchy kernel
// averages to 0 by odd symmetry. For ln|z| on [-a, a]^2:
//   int ln(x^2 + y^2) = 4 a^2 (ln(2 a^2) - 3 + pi/2).
inline cplx kernel_origin_average(KernelKind kind, double h) {
  if (kind == KernelKind::cauchy) return 0.0;
  const double a = 0.5 * h;
  return 0.5 * (std::log(2.0 * a * a) - 3.0 + 0.5 * kPi) / (2.0 * kPi);
}

// Spectrum of the cell-averaged kernel on the padded 2n x 2n grid.
inline std::shared_ptr<const fft::Buffer> kernel_spectrum(KernelKind kind, int n, double h) {
  static std::mutex m;
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const fft::Buffer>> cache;
  const auto key = std::make_tuple(static_cast<int>(kind), n, h);
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const int N = 2 * n;
  auto buf = std::make_shared<fft::Buffer>(static_cast<std::size_t>(N) * N);
  constexpr int kNear = 3;
  for (int qq = 0; qq < N; ++qq)
    for (int pp = 0; pp < N; ++pp) {
      const int p = pp < n ? pp : pp - N;
      const int q = qq < n ? qq : qq - N;
      cplx v;
      if (p == 0 && q == 0) {
        v = kernel_origin_average(kind, h);
      } else if (std::abs(p) <= kNear && std::abs(q) <= kNear) {
        v = kernel_cell_average(kind, cplx(p * h, q * h), h);
      } else {
        v = kernel_point(kind, cplx(p * h, q * h));
      }
      (*buf)[static_cast<std::size_t>(qq) * N + pp] = v * (h * h);
    }
  fft::forward(*buf, N);
  std::lock_guard<std::mutex> lock(m);
  if (cache.size() > 8) cache.clear();
  cache.emplace(key, buf);
  return buf;
}

inline void require_margin(const ComplexField& s, const char* what) {
  const Grid& g = s.grid;
  const double L = g.half_width();
  // Values below 1e-12 of the peak count as zero so that rapidly decaying
  // sources (Gaussians) are accepted.
  double peak = 0.0;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i)
      if (s.active(i, j)) peak = std::max(peak, std::abs(s(i, j)));
  const double tol = 1e-12 * peak;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      if (!s.active(i, j) || std::abs(s(i, j)) <= tol) continue;
      const cplx d = g.node(i, j) - g.center();
      if (std::abs(d.real()) > 0.9 * L || std::abs(d.imag()) > 0.9 * L)
        throw InvalidInput(std::string(what) +
                           ": source support touches the 10% margin of the grid box (aliasing risk)");
    }
}

inline void load_padded(const ComplexField& s, fft::Buffer& buf) {
  const int n = s.grid.n(), N = 2 * n;
  buf.zero();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (s.active(i, j)) buf[static_cast<std::size_t>(j) * N + i] = s(i, j);
}

inline ComplexField convolve(const ComplexField& s, KernelKind kind) {
  const Grid& g = s.grid;
  const int n = g.n(), N = 2 * n;
  auto ker = kernel_spectrum(kind, n, g.spacing());
  fft::Buffer buf(static_cast<std::size_t>(N) * N);
  load_padded(s, buf);
  fft::forward(buf, N);
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] *= (*ker)[k];
  fft::backward(buf, N);
  ComplexField out(g);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = buf[static_cast<std::size_t>(j) * N + i];
  return out;
}

}  // namespace detail

/// H(w) = -(1/pi) int S(zeta) / (zeta - w) dm(zeta) on the grid of S.
/// Masked-out nodes of S count as zero; the result is defined on the whole box.
inline ComplexField cauchy_transform(const ComplexField& S) {
  detail::require_margin(S, "cauchy_transform");
  return detail::convolve(S, KernelKind::cauchy);
}

/// N^G(z) = (1/2pi) int ln|z - w| G(w) dm(w) on the grid of G.
inline RealField log_potential(const RealField& G) {
  const ComplexField c = to_complex(G);
  detail::require_margin(c, "log_potential");
  return real_part(detail::convolve(c, KernelKind::log_potential));
}

/// Beurling transform, principal value -(1/pi) int h(zeta)/(zeta - w)^2 dm,
/// as the multiplier conj(xi)/xi on the padded spectrum (zero on the mean mode).
inline ComplexField beurling_transform(const ComplexField& h, bool check_margin = true) {
  if (check_margin) detail::require_margin(h, "beurling_transform");
  const Grid& g = h.grid;
  const int n = g.n(), N = 2 * n;
  fft::Buffer buf(static_cast<std::size_t>(N) * N);
  detail::load_padded(h, buf);
  fft::forward(buf, N);
  for (int qq = 0; qq < N; ++qq) {
    const double k2 = qq < n ? qq : qq - N;
    for (int pp = 0; pp < N; ++pp) {
      const double k1 = pp < n ? pp : pp - N;
      const std::size_t k = static_cast<std::size_t>(qq) * N + pp;
      if (pp == 0 && qq == 0) {
        buf[k] = 0.0;
        continue;
      }
      const cplx xi(k1, k2);
      buf[k] *= std::conj(xi) / xi;
    }
  }
  fft::backward(buf, N);
  ComplexField out(g);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = buf[static_cast<std::size_t>(j) * N + i];
  return out;
}

/// Regularity classes that verify_regularity can check.
enum class Smoothness { holder, c1 };

struct RegularityReport {
  bool flat = false;          // field (or gradient) identically zero
  double exponent = 0.0;      // fitted Holder exponent, capped at 1
  double required = 0.0;      // (1 - 2/p) - 0.1
  bool pass = false;
  std::vector<double> scales;      // delta_k
  std::vector<double> increments;  // max |F(z + delta_k e) - F(z)|
};

namespace detail {

template <class T>
void dyadic_increments(const Field<T>& f, RegularityReport& rep) {
  const Grid& g = f.grid;
  const int n = g.n();
  for (int step = 1; step * g.spacing() <= 0.25 * g.half_width() && step < n / 2; step *= 2) {
    double m = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (!f.active(i, j)) continue;
        if (i + step < n && f.active(i + step, j)) m = std::max(m, std::abs(f(i + step, j) - f(i, j)));
        if (j + step < n && f.active(i, j + step)) m = std::max(m, std::abs(f(i, j + step) - f(i, j)));
      }
    rep.scales.push_back(step * g.spacing());
    rep.increments.push_back(m);
  }
}

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double den = m * sxx - sx * sx;
  return den != 0.0 ? (m * sxy - sx * sy) / den : 0.0;
}

inline void finish_regularity(RegularityReport& rep, double p) {
  rep.required = (std::isinf(p) ? 1.0 : 1.0 - 2.0 / p) - 0.1;
  const double top = *std::max_element(rep.increments.begin(), rep.increments.end());
  if (top <= 1e-13) {
    rep.flat = true;
    rep.exponent = 1.0;
    rep.pass = true;
    return;
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < rep.scales.size(); ++k)
    if (rep.increments[k] > 0) {
      lx.push_back(std::log(rep.scales[k]));
      ly.push_back(std::log(rep.increments[k]));
    }
  rep.exponent = std::min(1.0, fit_slope(lx, ly));
  rep.pass = rep.exponent >= rep.required;
}

}  // namespace detail

/// Empirical Holder exponent from dyadic increments over active nodes. With
/// Smoothness::c1 the check runs on the finite-difference gradient instead.
/// `p` is the source integrability exponent (infinity for bounded sources).
template <class T>
RegularityReport verify_regularity(const Field<T>& F, double p, Smoothness s = Smoothness::holder) {
  RegularityReport rep;
  if (s == Smoothness::holder) {
    detail::dyadic_increments(F, rep);
  } else {
    ComplexField c(F.grid);
    c.mask = F.mask;
    for (std::size_t k = 0; k < F.values.size(); ++k) c.values[k] = F.values[k];
    auto [dz, dzb] = wirtinger_derivatives(c);
    RegularityReport a, b;
    detail::dyadic_increments(dz, a);
    detail::dyadic_increments(dzb, b);
    rep.scales = a.scales;
    rep.increments.resize(a.increments.size());
    for (std::size_t k = 0; k < a.increments.size(); ++k)
      rep.increments[k] = std::max(a.increments[k], b.increments[k]);
  }
  detail::finish_regularity(rep, p);
  return rep;
}

}  // namespace qcdir
