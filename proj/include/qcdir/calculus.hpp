#pragma once

#include <utility>

#include "qcdir/grid.hpp"

namespace qcdir {

namespace detail {

// d/dx (axis 0) or d/dy (axis 1): centered in the interior, second-order
// one-sided at the grid edge.
template <class T>
T partial(const Field<T>& f, int i, int j, int axis) {
  const int n = f.grid.n();
  const double h = f.grid.spacing();
  auto at = [&](int k) -> const T& { return axis == 0 ? f(k, j) : f(i, k); };
  const int c = axis == 0 ? i : j;
  if (c == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (c == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(c + 1) - at(c - 1)) / (2.0 * h);
}

}  // namespace detail

/// Wirtinger derivatives (F_z, F_zbar) by finite differences. The mask of F is
/// carried over unchanged; values next to masked nodes use whatever is stored
/// there, so callers restrict to interior nodes.
inline std::pair<ComplexField, ComplexField> wirtinger_derivatives(const ComplexField& F) {
  const Grid& g = F.grid;
  if (g.n() < 8) throw InvalidInput("grid too small for differentiation");
  ComplexField dz(g), dzb(g);
  dz.mask = F.mask;
  dzb.mask = F.mask;
  const cplx I(0.0, 1.0);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const cplx fx = detail::partial(F, i, j, 0);
      const cplx fy = detail::partial(F, i, j, 1);
      dz(i, j) = 0.5 * (fx - I * fy);
      dzb(i, j) = 0.5 * (fx + I * fy);
    }
  return {std::move(dz), std::move(dzb)};
}

/// Gradient (u_x, u_y) of a real field by the same stencils.
inline std::pair<RealField, RealField> gradient(const RealField& u) {
  const Grid& g = u.grid;
  RealField ux(g), uy(g);
  ux.mask = u.mask;
  uy.mask = u.mask;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      ux(i, j) = detail::partial(u, i, j, 0);
      uy(i, j) = detail::partial(u, i, j, 1);
    }
  return {std::move(ux), std::move(uy)};
}

/// Five-point Laplacian; edge nodes are set to zero.
template <class T>
Field<T> laplacian(const Field<T>& u) {
  const Grid& g = u.grid;
  const double h2 = g.spacing() * g.spacing();
  Field<T> out(g);
  out.mask = u.mask;
  for (int j = 1; j + 1 < g.n(); ++j)
    for (int i = 1; i + 1 < g.n(); ++i)
      out(i, j) = (u(i + 1, j) + u(i - 1, j) + u(i, j + 1) + u(i, j - 1) - 4.0 * u(i, j)) / h2;
  return out;
}

}  // namespace qcdir
