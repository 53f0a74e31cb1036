#pragma once

// Test-only reference values computed straight from the defining integrals by
// adaptive Gauss-Kronrod quadrature in polar coordinates centred at the
// evaluation point, where the kernels lose their singularity. Independent of
// the FFT/grid code paths under test.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;

template <class F>
double gk(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-12);
}

// int over |z| < R of g(z) dm(z), written as int dtheta int r g(w + r e^{i theta}) dr.
template <class G>
double disk_integral_around(G g, double R, cplx w) {
  const double d2 = std::norm(w);
  auto chord = [&](double t, double& r0, double& r1) {
    const cplx e = std::polar(1.0, t);
    const double b = (std::conj(w) * e).real();
    const double disc = b * b - d2 + R * R;
    if (disc <= 0) return false;
    const double s = std::sqrt(disc);
    r0 = std::max(0.0, -b - s);
    r1 = -b + s;
    return r1 > r0;
  };
  auto outer = [&](double t) {
    double r0, r1;
    if (!chord(t, r0, r1)) return 0.0;
    const cplx e = std::polar(1.0, t);
    return gk([&](double r) { return g(w + r * e, r) * r; }, r0, r1);
  };
  if (d2 < R * R) return gk(outer, -kPi, kPi);
  const double c = std::arg(-w), half = std::asin(R / std::sqrt(d2));
  return gk(outer, c - half, c) + gk(outer, c, c + half);
}

// Cauchy transform of the indicator of the disk |z| < R at w. With z = w + r e,
// the kernel times r is -conj(e)/pi, bounded.
inline cplx cauchy_disk(double R, cplx w) {
  auto re = [&](cplx z, double) { return (-1.0 / (kPi * (z - w))).real(); };
  auto im = [&](cplx z, double) { return (-1.0 / (kPi * (z - w))).imag(); };
  return {disk_integral_around(re, R, w), disk_integral_around(im, R, w)};
}

// Logarithmic potential of the indicator of |z| < R at w.
inline double log_potential_disk(double R, cplx w) {
  auto f = [](cplx, double r) { return r > 0 ? std::log(r) / (2 * kPi) : 0.0; };
  return disk_integral_around(f, R, w);
}

}  // namespace oracle
