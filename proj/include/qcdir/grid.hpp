#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qcdir/error.hpp"

namespace qcdir {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Uniform square grid of n x n nodes covering [center - L, center + L)^2.
///
/// Node (i, j) sits at center + (-L + i*h) + I*(-L + j*h) with h = 2L/n, so
/// the node with i = j = n/2 is the center itself. Storage is row-major with
/// the x-index running fastest.
class Grid {
 public:
  Grid() = default;
  Grid(cplx center, double half_width, int n)
      : center_(center), half_width_(half_width), n_(n) {
    if (n < 8) throw InvalidInput("grid too small: n = " + std::to_string(n) + " < 8");
    if ((n & (n - 1)) != 0)
      throw InvalidInput("grid size must be a power of two, got " + std::to_string(n));
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw InvalidInput("grid half-width must be positive and finite");
  }

  cplx center() const { return center_; }
  double half_width() const { return half_width_; }
  int n() const { return n_; }
  double spacing() const { return 2.0 * half_width_ / n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  double cell_area() const { return spacing() * spacing(); }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * n_ + static_cast<std::size_t>(i);
  }
  double x(int i) const { return center_.real() - half_width_ + i * spacing(); }
  double y(int j) const { return center_.imag() - half_width_ + j * spacing(); }
  cplx node(int i, int j) const { return {x(i), y(j)}; }

  /// Fractional grid coordinates of an arbitrary point.
  double fi(cplx z) const { return (z.real() - center_.real() + half_width_) / spacing(); }
  double fj(cplx z) const { return (z.imag() - center_.imag() + half_width_) / spacing(); }

  bool contains(cplx z) const {
    const double a = fi(z), b = fj(z);
    return a >= 0.0 && b >= 0.0 && a <= n_ - 1 && b <= n_ - 1;
  }

  /// Same box, different resolution.
  Grid refined(int new_n) const { return Grid(center_, half_width_, new_n); }

  bool operator==(const Grid& o) const {
    return center_ == o.center_ && half_width_ == o.half_width_ && n_ == o.n_;
  }

 private:
  cplx center_{0.0, 0.0};
  double half_width_ = 1.0;
  int n_ = 8;
};

/// Values sampled on a Grid with an optional validity mask (true = inside).
template <class T>
struct Field {
  Grid grid;
  std::vector<T> values;
  std::optional<std::vector<std::uint8_t>> mask;

  Field() = default;
  explicit Field(const Grid& g, T fill = T{}) : grid(g), values(g.size(), fill) {}

  T& operator()(int i, int j) { return values[grid.index(i, j)]; }
  const T& operator()(int i, int j) const { return values[grid.index(i, j)]; }

  bool active(std::size_t k) const { return !mask || (*mask)[k] != 0; }
  bool active(int i, int j) const { return active(grid.index(i, j)); }

  std::size_t active_count() const {
    if (!mask) return values.size();
    return static_cast<std::size_t>(std::count(mask->begin(), mask->end(), std::uint8_t{1}));
  }
};

using ComplexField = Field<cplx>;
using RealField = Field<double>;

template <class T>
Field<T> sample(const Grid& g, const std::function<T(cplx)>& fn) {
  Field<T> out(g);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) out(i, j) = fn(g.node(i, j));
  return out;
}

inline ComplexField sample_complex(const Grid& g, const std::function<cplx(cplx)>& fn) {
  return sample<cplx>(g, fn);
}
inline RealField sample_real(const Grid& g, const std::function<double(cplx)>& fn) {
  return sample<double>(g, fn);
}

template <class T>
Field<T> with_mask(Field<T> f, std::vector<std::uint8_t> mask) {
  f.mask = std::move(mask);
  return f;
}

/// Sets every masked-out node to `fill` and drops the mask.
template <class T>
Field<T> extend_outside(const Field<T>& f, T fill) {
  Field<T> out = f;
  if (f.mask)
    for (std::size_t k = 0; k < f.values.size(); ++k)
      if (!(*f.mask)[k]) out.values[k] = fill;
  out.mask.reset();
  return out;
}

inline RealField real_part(const ComplexField& f) {
  RealField out(f.grid);
  out.mask = f.mask;
  for (std::size_t k = 0; k < f.values.size(); ++k) out.values[k] = f.values[k].real();
  return out;
}
inline RealField imag_part(const ComplexField& f) {
  RealField out(f.grid);
  out.mask = f.mask;
  for (std::size_t k = 0; k < f.values.size(); ++k) out.values[k] = f.values[k].imag();
  return out;
}
inline ComplexField to_complex(const RealField& f) {
  ComplexField out(f.grid);
  out.mask = f.mask;
  for (std::size_t k = 0; k < f.values.size(); ++k) out.values[k] = f.values[k];
  return out;
}

/// Discrete L2 norm with cell-area weights over active nodes.
template <class T>
double l2_norm(const Field<T>& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k)
    if (f.active(k)) s += std::norm(f.values[k]);
  return std::sqrt(s * f.grid.cell_area());
}

/// Discrete L_q norm (cell-area weights) over active nodes.
template <class T>
double lq_norm(const Field<T>& f, double q) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k)
    if (f.active(k)) s += std::pow(std::abs(f.values[k]), q);
  return std::pow(s * f.grid.cell_area(), 1.0 / q);
}

template <class T>
double max_abs(const Field<T>& f) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k)
    if (f.active(k)) m = std::max(m, std::abs(f.values[k]));
  return m;
}

namespace detail {

// Keys cubic convolution weights (a = -1/2) and their derivatives.
inline void cubic_weights(double t, double w[4], double dw[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2 * t2 - t);
  w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
  w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
  dw[0] = 0.5 * (-3 * t2 + 4 * t - 1);
  dw[1] = 0.5 * (9 * t2 - 10 * t);
  dw[2] = 0.5 * (-9 * t2 + 8 * t + 1);
  dw[3] = 0.5 * (3 * t2 - 2 * t);
}

}  // namespace detail

/// Value and x/y partials of a piecewise-bicubic interpolant.
template <class T>
struct Interpolated {
  T value{};
  T dx{};
  T dy{};
  bool exact_stencil = true;  // false when the mask forced a lower-order fallback
};

/// C^1 bicubic (Keys) interpolation. Near masked nodes or the grid edge it
/// falls back to bilinear, then to the nearest active node.
template <class T>
Interpolated<T> interpolate(const Field<T>& f, cplx z) {
  const Grid& g = f.grid;
  const int n = g.n();
  const double a = std::clamp(g.fi(z), 0.0, static_cast<double>(n - 1));
  const double b = std::clamp(g.fj(z), 0.0, static_cast<double>(n - 1));
  int i0 = std::min(static_cast<int>(std::floor(a)), n - 2);
  int j0 = std::min(static_cast<int>(std::floor(b)), n - 2);
  const double tx = a - i0, ty = b - j0;
  const double h = g.spacing();
  Interpolated<T> out;

  bool cubic_ok = i0 >= 1 && j0 >= 1 && i0 + 2 < n && j0 + 2 < n;
  if (cubic_ok && f.mask) {
    for (int q = -1; q <= 2 && cubic_ok; ++q)
      for (int p = -1; p <= 2 && cubic_ok; ++p)
        if (!f.active(i0 + p, j0 + q)) cubic_ok = false;
  }
  if (cubic_ok) {
    double wx[4], dwx[4], wy[4], dwy[4];
    detail::cubic_weights(tx, wx, dwx);
    detail::cubic_weights(ty, wy, dwy);
    for (int q = 0; q < 4; ++q)
      for (int p = 0; p < 4; ++p) {
        const T& v = f(i0 + p - 1, j0 + q - 1);
        out.value += wx[p] * wy[q] * v;
        out.dx += dwx[p] * wy[q] * v;
        out.dy += wx[p] * dwy[q] * v;
      }
    out.dx /= h;
    out.dy /= h;
    return out;
  }
  out.exact_stencil = false;
  const bool lin_ok = !f.mask || (f.active(i0, j0) && f.active(i0 + 1, j0) &&
                                  f.active(i0, j0 + 1) && f.active(i0 + 1, j0 + 1));
  if (lin_ok) {
    const T& v00 = f(i0, j0);
    const T& v10 = f(i0 + 1, j0);
    const T& v01 = f(i0, j0 + 1);
    const T& v11 = f(i0 + 1, j0 + 1);
    out.value = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 +
                tx * ty * v11;
    out.dx = ((1 - ty) * (v10 - v00) + ty * (v11 - v01)) / h;
    out.dy = ((1 - tx) * (v01 - v00) + tx * (v11 - v10)) / h;
    return out;
  }
  // Nearest active node within a small window.
  const int ic = static_cast<int>(std::lround(a)), jc = static_cast<int>(std::lround(b));
  double best = 1e300;
  for (int r = 0; r <= 4 && best == 1e300; ++r)
    for (int q = std::max(0, jc - r); q <= std::min(n - 1, jc + r); ++q)
      for (int p = std::max(0, ic - r); p <= std::min(n - 1, ic + r); ++p) {
        if (!f.active(p, q)) continue;
        const double d = (p - a) * (p - a) + (q - b) * (q - b);
        if (d < best) {
          best = d;
          out.value = f(p, q);
        }
      }
  return out;
}

template <class T>
T interpolate_value(const Field<T>& f, cplx z) {
  return interpolate(f, z).value;
}

}  // namespace qcdir
