#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qcdir/domain.hpp"
#include "qcdir/error.hpp"
#include "qcdir/grid.hpp"

namespace qcdir::presets {

/// |mu| = (K - 1)/(K + 1) for a given dilatation K >= 1.
inline double modulus_for_K(double K) {
  if (!(K >= 1.0)) throw InvalidInput("dilatation must be >= 1");
  if (std::isinf(K)) return 1.0;
  return (K - 1.0) / (K + 1.0);
}

/// mu = ((K(r) - 1)/(K(r) + 1)) z/conj(z) on |z - c| < R, zero elsewhere and at c.
/// The radial direction is stretched: for constant K the map is z|z|^{K-1}.
inline ComplexField radial_mu(const Grid& g, const std::function<double(double)>& K, double R = 1.0,
                              cplx c = 0.0) {
  ComplexField mu(g);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const cplx d = g.node(i, j) - c;
      const double r = std::abs(d);
      if (r == 0.0 || r >= R) continue;
      mu(i, j) = modulus_for_K(K(r / R)) * (d / std::conj(d));
    }
  return mu;
}

/// Radial stretch f(z) = z|z|^{K-1} inside the unit disk, z outside.
inline ComplexField radial_stretch_mu(const Grid& g, double K) {
  return radial_mu(g, [K](double) { return K; });
}

inline cplx radial_stretch_map(cplx z, double K) {
  const double r = std::abs(z);
  return r < 1.0 ? z * std::pow(r, K - 1.0) : z;
}

inline cplx radial_stretch_inverse(cplx w, double K) {
  const double r = std::abs(w);
  return r < 1.0 && r > 0.0 ? w * std::pow(r, 1.0 / K - 1.0) : w;
}

/// Constant mu on the disk |z| < R.
inline ComplexField constant_disk_mu(const Grid& g, cplx value, double R = 1.0) {
  if (!(std::abs(value) < 1.0)) throw InvalidInput("constant mu violates the ellipticity bound |mu| < 1");
  return sample_complex(g, [=](cplx z) { return std::abs(z) < R ? value : cplx(0.0); });
}

/// K(r) = 1 + log(e/(1 - r)) on the unit disk: exponentially integrable boundary blow-up.
inline ComplexField boundary_log_mu(const Grid& g) {
  return radial_mu(g, [](double r) { return 2.0 + std::log(1.0 / (1.0 - r)); });
}

/// K(r) = (1 - r)^{-2}: not exponentially integrable; the truncated maps collapse.
inline ComplexField boundary_power_mu(const Grid& g) {
  return radial_mu(g, [](double r) { return std::max(1.0, std::pow(1.0 - r, -2.0)); });
}

/// Analytic coefficient evaluated at z = base + d. Keeping the offset apart
/// lets criteria probe shells far below double spacing around a base point.
struct MuFunction {
  std::function<cplx(cplx base, cplx d)> at;

  cplx operator()(cplx z) const { return at(z, 0.0); }
  cplx operator()(cplx base, cplx d) const { return at(base, d); }
};

namespace detail {

/// |base + d|^2 - 1 without cancellation; |base| within 1e-12 of 1 counts as 1.
inline double excess(cplx base, cplx d) {
  double e = std::norm(base) - 1.0;
  if (std::abs(e) < 1e-12) e = 0.0;
  return e + 2.0 * (std::conj(base) * d).real() + std::norm(d);
}

inline bool in_unit_disk(cplx base, cplx d) { return excess(base, d) < 0.0; }

/// 1 - |base + d| for points of the unit disk.
inline double one_minus_r(cplx base, cplx d) { return -excess(base, d) / (1.0 + std::abs(base + d)); }

/// (base + d) - c, exact when base == c.
inline cplx offset(cplx base, cplx d, cplx c) { return base == c ? d : (base - c) + d; }

inline MuFunction radial(std::function<double(double r, double one_minus_r)> K) {
  return {[K = std::move(K)](cplx base, cplx d) -> cplx {
    const cplx z = offset(base, d, 0.0);
    const double r = std::abs(z);
    if (r == 0.0 || !in_unit_disk(base, d)) return 0.0;
    return modulus_for_K(K(r, one_minus_r(base, d))) * z / std::conj(z);
  }};
}

}  // namespace detail

inline ComplexField sample_mu(const Grid& g, const MuFunction& mu) {
  return sample_complex(g, [&](cplx z) { return mu(z); });
}

/// mu = -k (z - z0)/conj(z - z0) on the unit disk: K^T(z, z0) = (1 + k)/(1 - k).
inline MuFunction tangent_mu(double k, cplx z0) {
  if (!(k >= 0.0 && k < 1.0)) throw InvalidInput("tangent preset needs 0 <= k < 1 (ellipticity bound |mu| < 1)");
  return {[=](cplx base, cplx d) -> cplx {
    const cplx w = detail::offset(base, d, z0);
    if (w == cplx(0.0) || !detail::in_unit_disk(base, d)) return 0.0;
    return -k * w / std::conj(w);
  }};
}

/// K = log^lambda(e/|z - z0|) (at least 1) on the unit disk, tangent direction.
inline MuFunction log_degenerate_mu(double lambda, cplx z0) {
  if (!(lambda > 0.0)) throw InvalidInput("log-degenerate preset needs lambda > 0");
  return {[=](cplx base, cplx d) -> cplx {
    const cplx w = detail::offset(base, d, z0);
    const double r = std::abs(w);
    if (r == 0.0 || !detail::in_unit_disk(base, d)) return 0.0;
    const double K = std::max(1.0, std::pow(std::max(0.0, 1.0 - std::log(r)), lambda));
    return -modulus_for_K(K) * w / std::conj(w);
  }};
}

/// Callable form of the named mu presets. params: radial-stretch {K},
/// constant-disk {Re mu, Im mu}, tangent {k, Re z0, Im z0},
/// log-degenerate {lambda, Re z0, Im z0}; boundary-log and boundary-power take none.
inline MuFunction mu_function(const std::string& name, const std::vector<double>& params) {
  auto need = [&](std::size_t n) {
    if (params.size() < n)
      throw InvalidInput("mu preset '" + name + "' needs " + std::to_string(n) + " parameter(s)");
  };
  auto at = [&](std::size_t i) { return i < params.size() ? params[i] : 0.0; };
  if (name == "zero") return {[](cplx, cplx) { return cplx(0.0); }};
  if (name == "radial-stretch") {
    need(1);
    const double K = params[0];
    modulus_for_K(K);
    return detail::radial([K](double, double) { return K; });
  }
  if (name == "constant-disk") {
    need(1);
    const cplx v(params[0], at(1));
    if (!(std::abs(v) < 1.0)) throw InvalidInput("constant mu violates the ellipticity bound |mu| < 1");
    return {[v](cplx base, cplx d) { return detail::in_unit_disk(base, d) ? v : cplx(0.0); }};
  }
  if (name == "boundary-log")
    return detail::radial([](double, double q) { return 2.0 + std::log(1.0 / q); });
  if (name == "boundary-power")
    return detail::radial([](double, double q) { return std::max(1.0, std::pow(q, -2.0)); });
  if (name == "tangent") {
    need(1);
    return tangent_mu(params[0], cplx(at(1), at(2)));
  }
  if (name == "log-degenerate") {
    need(1);
    return log_degenerate_mu(params[0], cplx(at(1), at(2)));
  }
  throw InvalidInput("unknown mu preset '" + name + "'");
}

/// Named mu presets accepted by the command line tool, sampled on g.
inline ComplexField mu_preset(const std::string& name, const Grid& g, const std::vector<double>& params) {
  return sample_mu(g, mu_function(name, params));
}

inline ComplexField mu_preset(const std::string& name, const Grid& g, double param) {
  return mu_preset(name, g, std::vector<double>{param});
}

/// Boundary data presets: const {c}, cos-harmonic {m} (cos(m theta) about the
/// centroid; `cos` is an alias), table {v_0, ..., v_{p-1}} read as equally
/// spaced arclength samples, interpolated linearly and periodically.
inline BoundaryData phi_preset(const std::string& name, const DomainSpec& d, const std::vector<double>& params) {
  if (name == "const") return boundary_data_from(d, [c = params.empty() ? 0.0 : params[0]](cplx) { return c; });
  if (name == "cos-harmonic" || name == "cos") {
    const double m = params.empty() ? 1.0 : params[0];
    const cplx c = d.centroid();
    return boundary_data_from(d, [=](cplx z) { return std::cos(m * std::arg(z - c)); });
  }
  if (name == "table") {
    if (params.size() < 2) throw InvalidInput("table boundary data needs at least 2 values");
    double total = 0.0;
    const auto cum = d.arclength(&total);
    std::vector<double> v(d.size());
    const double p = static_cast<double>(params.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double x = cum[k] / total * p;
      const std::size_t i = static_cast<std::size_t>(x) % params.size();
      const double t = x - std::floor(x);
      v[k] = (1 - t) * params[i] + t * params[(i + 1) % params.size()];
    }
    return BoundaryData(std::move(v));
  }
  throw InvalidInput("unknown boundary data preset '" + name + "'");
}

}  // namespace qcdir::presets
