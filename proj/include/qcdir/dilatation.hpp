#pragma once

#include <cmath>
#include <sstream>

#include "qcdir/grid.hpp"

namespace qcdir {

/// K_mu = (1 + |mu|) / (1 - |mu|).
inline double dilatation(cplx mu) {
  const double a = std::abs(mu);
  return (1.0 + a) / (1.0 - a);
}

/// Tangent dilatation K^T_mu(z, z0) = |1 - conj(z-z0)/(z-z0) mu|^2 / (1 - |mu|^2).
/// At z == z0 the direction is undefined and K_mu is returned instead.
inline double tangent_dilatation(cplx mu, cplx z, cplx z0) {
  const cplx d = z - z0;
  if (d == cplx(0.0, 0.0)) return dilatation(mu);
  const cplx rot = std::conj(d) / d;
  return std::norm(1.0 - rot * mu) / (1.0 - std::norm(mu));
}

namespace detail {
inline void require_elliptic(const ComplexField& mu, int i, int j) {
  const cplx m = mu(i, j);
  if (!(std::abs(m) < 1.0)) {
    std::ostringstream os;
    os << "|mu| >= 1 at node (" << i << ", " << j << ") z = " << mu.grid.node(i, j).real() << "+"
       << mu.grid.node(i, j).imag() << "i, |mu| = " << std::abs(m);
    throw InvalidInput(os.str());
  }
}
}  // namespace detail

/// Per-node K_mu; masked-out nodes report 1.
inline RealField dilatation_quotient(const ComplexField& mu) {
  RealField k(mu.grid, 1.0);
  k.mask = mu.mask;
  for (int j = 0; j < mu.grid.n(); ++j)
    for (int i = 0; i < mu.grid.n(); ++i) {
      if (!mu.active(i, j)) continue;
      detail::require_elliptic(mu, i, j);
      k(i, j) = dilatation(mu(i, j));
    }
  return k;
}

/// Per-node K^T_mu(., z0); masked-out nodes report 1, the node z0 reports K_mu.
inline RealField tangent_dilatation_field(const ComplexField& mu, cplx z0) {
  RealField k(mu.grid, 1.0);
  k.mask = mu.mask;
  for (int j = 0; j < mu.grid.n(); ++j)
    for (int i = 0; i < mu.grid.n(); ++i) {
      if (!mu.active(i, j)) continue;
      detail::require_elliptic(mu, i, j);
      k(i, j) = tangent_dilatation(mu(i, j), mu.grid.node(i, j), z0);
    }
  return k;
}

}  // namespace qcdir
