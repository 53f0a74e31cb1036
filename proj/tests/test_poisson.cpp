#include <gtest/gtest.h>

#include <random>

#include "qcdir/poisson.hpp"
#include "qcdir/presets.hpp"

using namespace qcdir;

namespace {

RealField disk_indicator(const Grid& g, double R) {
  return sample_real(g, [R](cplx z) { return std::abs(z) <= R ? 1.0 : 0.0; });
}

PoissonProblem disk_problem(const Grid& g, RealField src, std::function<double(cplx)> phi) {
  auto d = disk_domain(0, 1, 512);
  return {d, MatrixField(g), std::move(src), boundary_data_from(d, std::move(phi))};
}

double bump_integral(const Bump& b, const Grid& g) {
  double s = 0;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) s += b.value(g.node(i, j));
  return s * g.cell_area();
}

}  // namespace

TEST(Dictionary, IdentityAndDiagonal) {
  EXPECT_EQ(mu_from_A({1, 0, 0, 1}), cplx(0.0));
  EXPECT_EQ(mu_from_A({3, 0, 0, 1.0 / 3}), cplx(-0.5));
  const auto A = A_from_mu(cplx(-0.5));
  EXPECT_NEAR(A[0], 3.0, 1e-15);
  EXPECT_NEAR(A[3], 1.0 / 3, 1e-15);
  EXPECT_EQ(A[1], 0.0);
  const auto I = A_from_mu(cplx(0.0));
  EXPECT_EQ(I[0], 1.0);
  EXPECT_EQ(I[3], 1.0);
}

TEST(Dictionary, OffDiagonalGivesImaginaryMu) {
  for (double s : {0.3, -1.2, 4.0}) {
    const double d = std::sqrt(1 + s * s);
    const cplx mu = mu_from_A({d, s, s, d});
    EXPECT_NEAR(mu.real(), 0.0, 1e-15);
    EXPECT_NEAR(mu.imag(), -2 * s / (2 + 2 * d), 1e-15);
  }
}

TEST(Dictionary, RoundTripAndInvariants) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const cplx mu = std::polar(0.95 * u(rng), 2 * kPi * u(rng));
    const auto A = A_from_mu(mu);
    EXPECT_LE(std::abs(mu_from_A(A) - mu), 1e-12);
    EXPECT_NEAR(A[0] * A[3] - A[1] * A[2], 1.0, 1e-10);
    EXPECT_GT((1 + A[0]) * (1 + A[3]), A[1] * A[2]);
    EXPECT_EQ(A[1], A[2]);
  }
  EXPECT_THROW(A_from_mu(cplx(1.0)), InvalidInput);
}

TEST(Dictionary, MatrixInvariantsNamed) {
  Grid g({0, 0}, 1, 8);
  MatrixField A(g);
  EXPECT_NO_THROW(check_matrix(A));
  A.a12.values[5] = 0.1;
  try {
    check_matrix(A);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("symmetry"), std::string::npos);
  }
  A.a21.values[5] = 0.1;
  try {
    check_matrix(A);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("det A = 1"), std::string::npos);
  }
  const auto mu = mu_from_A(A_from_mu(ComplexField(g, cplx(0.2, -0.1))));
  for (const cplx& v : mu.values) EXPECT_NEAR(std::abs(v - cplx(0.2, -0.1)), 0.0, 1e-14);
}

TEST(PushforwardDensity, ZeroAndIdentity) {
  Grid g({0, 0}, 1.25, 64);
  auto id = solve_mu_conformal(ComplexField(g, 0.0), 1e-10);
  EXPECT_EQ(max_abs(pushforward_density(RealField(g, 0.0), id, g)), 0.0);
  auto src = sample_real(g, [](cplx z) { return std::abs(z) < 0.5 ? 1 + z.real() : 0.0; });
  auto G = pushforward_density(src, id, g);
  for (std::size_t k = 0; k < g.size(); ++k) ASSERT_NEAR(G.values[k], src.values[k], 1e-9);
}

TEST(PushforwardDensity, RadialStretchJacobian) {
  Grid g({0, 0}, 1.25, 256);
  auto m = solve_mu_conformal(presets::radial_stretch_mu(g, 2.0), 1e-10);
  auto G = pushforward_density(disk_indicator(g, 0.25), m, g);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i)
      if (G(i, j) != 0.0) ASSERT_LE(std::abs(g.node(i, j)), 0.0625 + 2 * g.spacing());
  // G = 1/J o f^-1 with J = 2|z|^2 for f = z|z|.
  for (cplx w : {cplx(0.03, 0.0), cplx(0.0, -0.04), cplx(0.02, 0.02)}) {
    const int i = static_cast<int>(std::lround(g.fi(w))), j = static_cast<int>(std::lround(g.fj(w)));
    const cplx z = presets::radial_stretch_inverse(g.node(i, j), 2.0);
    const double expect = 1 / (2 * std::norm(z));
    EXPECT_NEAR(G(i, j), expect, 0.05 * expect);
  }
}

TEST(PoissonSolve, HarmonicCaseIsX) {
  Grid g({0, 0}, 1.25, 128);
  auto s = solve_poisson(disk_problem(g, RealField(g, 0.0), [](cplx z) { return z.real(); }));
  for (cplx z : {cplx(0.5, 0.3), cplx(-0.2, -0.7), cplx(0, 0)}) EXPECT_NEAR(evaluate(s, z), z.real(), 1e-6);
  EXPECT_LT(s.report.weak.max_residual, 1e-3);
  EXPECT_EQ(max_abs(s.G), 0.0);
}

TEST(PoissonSolve, DiskSourceCentreValue) {
  Grid g({0, 0}, 1.25, 256);
  auto s = solve_poisson(disk_problem(g, disk_indicator(g, 0.5), [](cplx) { return 0.0; }));
  // Radial oracle: u = r^2/4 - (1/8) ln 2 - 1/16 for r < 1/2.
  EXPECT_NEAR(evaluate(s, 0.0), -(std::log(2.0) / 8 + 1.0 / 16), 1e-2);
  EXPECT_NEAR(evaluate(s, cplx(0.25, 0)), 0.25 * 0.25 / 4 - (std::log(2.0) / 8 + 1.0 / 16), 1e-2);
  EXPECT_NEAR(evaluate(s, cplx(0, 0.75)), std::log(0.75) / 8, 1e-2);
  EXPECT_LT(s.report.weak.max_residual, 1e-2);
  EXPECT_LT(s.report.weak.boundary_error, 1e-2);
}

TEST(PoissonSolve, WeakResidualDecreasesUnderRefinement) {
  double prev = 1e300;
  for (int n : {64, 128, 256}) {
    Grid g({0, 0}, 1.25, n);
    auto s = solve_poisson(disk_problem(g, disk_indicator(g, 0.5), [](cplx) { return 0.0; }));
    EXPECT_LT(s.report.weak.max_residual, prev) << n;
    prev = s.report.weak.max_residual;
  }
}

TEST(PoissonSolve, MaximumPrinciple) {
  Grid g({0, 0}, 1.25, 128);
  auto phi = [](cplx z) { return std::cos(3 * std::arg(z)) + 0.5 * z.imag(); };
  auto p = disk_problem(g, RealField(g, 0.0), phi);
  double lo = 1e300, hi = -1e300;
  for (std::size_t k = 0; k < p.phi.size(); ++k) lo = std::min(lo, p.phi[k]), hi = std::max(hi, p.phi[k]);
  auto s = solve_poisson(p);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!s.u.active(k)) continue;
    EXPECT_GE(s.u.values[k], lo - 1e-3);
    EXPECT_LE(s.u.values[k], hi + 1e-3);
  }
}

TEST(PoissonSolve, RadialStretchCoefficients) {
  Grid g({0, 0}, 1.25, 256);
  auto d = disk_domain(0, 1, 512);
  auto A = A_from_mu(presets::radial_stretch_mu(g, 2.0));
  PoissonProblem p{d, A, RealField(g, 0.0), boundary_data_from(d, [](cplx z) { return z.real(); })};
  auto s = solve_poisson(p);
  // f maps the disk onto itself fixing the circle, so H = Re w and u = x|z|.
  for (cplx z : {cplx(0.5, 0.1), cplx(-0.3, 0.6), cplx(0.1, -0.2)})
    EXPECT_NEAR(evaluate(s, z), z.real() * std::abs(z), 1e-2);
  EXPECT_LT(s.report.weak.max_residual, 1e-2);
}

TEST(PoissonSolve, GradientRegularity) {
  Grid g({0, 0}, 1.25, 128);
  auto s = solve_poisson(disk_problem(g, disk_indicator(g, 0.5), [](cplx) { return 0.0; }));
  RealField core = s.u;
  std::vector<std::uint8_t> m(g.size(), 0);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) m[g.index(i, j)] = std::abs(g.node(i, j)) < 0.8;
  core.mask = m;
  EXPECT_GT(verify_regularity(core, std::numeric_limits<double>::infinity(), Smoothness::c1).exponent, 0.5);
}

TEST(PoissonSolve, ValidationStageTagged) {
  Grid g({0, 0}, 1.25, 64);
  auto p = disk_problem(g, disk_indicator(g, 0.99), [](cplx) { return 0.0; });
  try {
    solve_poisson(p);
    FAIL();
  } catch (const StageFailure& e) {
    EXPECT_EQ(e.stage(), "validate");
    EXPECT_NE(std::string(e.what()).find("compact-support margin"), std::string::npos);
  }
  p.g = RealField(g, 0.0);
  p.A.a11.values[g.index(32, 32)] = 2.0;
  try {
    solve_poisson(p);
    FAIL();
  } catch (const StageFailure& e) {
    EXPECT_EQ(e.stage(), "validate");
    EXPECT_NE(std::string(e.what()).find("det A = 1"), std::string::npos);
  }
}

TEST(WeakResidual, HarmonicExactness) {
  Grid g({0, 0}, 1.25, 128);
  auto p = disk_problem(g, RealField(g, 0.0), [](cplx z) { return z.real(); });
  auto u = sample_real(g, [](cplx z) { return z.real(); });
  auto r = weak_residual(u, p);
  EXPECT_EQ(r.basis.size(), 25u);
  // Only bump quadrature error remains; the boundary probe sits 2h inside.
  EXPECT_LT(r.max_residual, 1e-3);
  EXPECT_LE(r.boundary_error, 2 * g.spacing() + 1e-12);
}

TEST(WeakResidual, QuadraticPerturbation) {
  Grid g({0, 0}, 1.25, 256);
  auto p = disk_problem(g, RealField(g, 0.0), [](cplx z) { return z.real(); });
  auto base = weak_residual(sample_real(g, [](cplx z) { return z.real(); }), p);
  auto pert = weak_residual(sample_real(g, [](cplx z) { return z.real() + 0.1 * z.real() * z.real(); }), p);
  // int <grad(0.1 x^2), grad psi> = -int 0.2 psi.
  for (std::size_t m = 0; m < base.basis.size(); ++m) {
    const double expect = -0.2 * bump_integral(base.basis[m], g) / base.grad_norm[m];
    EXPECT_NEAR(pert.residual[m] - base.residual[m], expect, 0.1 * std::abs(expect));
  }
  EXPECT_GT(pert.max_residual, base.max_residual);
}

TEST(WeakResidual, BasisMustBeSquare) {
  EXPECT_THROW(bump_basis(disk_domain(0, 1), 24), InvalidInput);
}

TEST(DivergenceIdentity, IdentityMapSquares) {
  Grid g({0, 0}, 1.25, 128);
  auto id = solve_mu_conformal(ComplexField(g, 0.0), 1e-10);
  auto d = disk_domain(0, 1);
  auto r = divergence_identity_check([](cplx w) { return std::norm(w); }, id, MatrixField(g), d);
  for (std::size_t m = 0; m < r.basis.size(); ++m) {
    const double expect = -4 * bump_integral(r.basis[m], g);
    EXPECT_NEAR(r.strong[m], expect, 1e-6 * std::abs(expect));
    EXPECT_NEAR(r.lhs[m], r.rhs[m], 1e-10);
    EXPECT_NEAR(r.lhs[m], expect, 0.2 * std::abs(expect));
  }
  auto h = divergence_identity_check([](cplx w) { return (w * w).real(); }, id, MatrixField(g), d);
  for (std::size_t m = 0; m < h.basis.size(); ++m) {
    EXPECT_NEAR(h.lhs[m], h.rhs[m], 1e-10);
    EXPECT_NEAR(h.strong[m], 0.0, 1e-6);
    EXPECT_LT(std::abs(h.lhs[m]), 1e-2 * std::abs(r.lhs[m]));
  }
}

TEST(DivergenceIdentity, RadialStretch) {
  Grid g({0, 0}, 1.25, 256);
  auto mu = presets::radial_stretch_mu(g, 2.0);
  auto f = solve_mu_conformal(mu, 1e-10);
  auto r = divergence_identity_check([](cplx w) { return (w * w).real(); }, f, A_from_mu(mu), disk_domain(0, 1));
  EXPECT_LT(r.max_difference, 1e-2);
  EXPECT_THROW(divergence_identity_check([](cplx w) { return w.real(); }, f, MatrixField(g), disk_domain(0, 1)),
               InvalidInput);
}
