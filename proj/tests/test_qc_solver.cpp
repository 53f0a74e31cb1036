#include <gtest/gtest.h>

#include <random>

#include "qcdir/calculus.hpp"
#include "qcdir/presets.hpp"
#include "qcdir/qc_solver.hpp"

using namespace qcdir;

namespace {

// Residual of F_zbar = mu F_z at z, by centered differences of the closed form.
cplx beltrami_defect(const std::function<cplx(cplx)>& F, const std::function<cplx(cplx)>& mu, cplx z) {
  const double e = 1e-6;
  const cplx fx = (F(z + e) - F(z - e)) / (2 * e);
  const cplx fy = (F(z + cplx(0, e)) - F(z - cplx(0, e))) / (2 * e);
  const cplx fz = 0.5 * (fx - cplx(0, 1) * fy), fzb = 0.5 * (fx + cplx(0, 1) * fy);
  return fzb - mu(z) * fz;
}

}  // namespace

TEST(RadialStretchOracle, SatisfiesBeltramiEquation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  for (double K : {2.0, 3.5}) {
    auto F = [K](cplx z) { return presets::radial_stretch_map(z, K); };
    auto mu = [K](cplx z) { return ((K - 1) / (K + 1)) * z / std::conj(z); };
    for (int s = 0; s < 200; ++s) {
      const cplx z(u(rng), u(rng));
      if (std::abs(z) > 0.95 || std::abs(z) < 0.05) continue;
      EXPECT_LT(std::abs(beltrami_defect(F, mu, z)), 1e-6);
    }
    EXPECT_NEAR(std::abs(presets::radial_stretch_inverse(F(cplx(0.3, 0.4)), K) - cplx(0.3, 0.4)), 0.0, 1e-14);
  }
}

TEST(QCSolver, ZeroMuIsIdentity) {
  Grid g({0, 0}, 1.25, 64);
  auto m = solve_mu_conformal(ComplexField(g, 0.0), 1e-10);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      EXPECT_NEAR(std::abs(m.f(i, j) - g.node(i, j)), 0.0, 1e-14);
      EXPECT_DOUBLE_EQ(m.J(i, j), 1.0);
    }
}

TEST(QCSolver, RadialStretchMatchesClosedForm) {
  Grid g({0, 0}, 1.25, 256);
  auto m = solve_mu_conformal(presets::radial_stretch_mu(g, 2.0), 1e-10);
  EXPECT_NEAR(std::abs(m(0.5) - 0.25), 0.0, 1e-2);
  double err = 0.0;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) {
      const cplx z = g.node(i, j);
      if (std::abs(z) <= 0.9) err = std::max(err, std::abs(m.f(i, j) - presets::radial_stretch_map(z, 2.0)));
      ASSERT_GT(m.J(i, j), 0.0);
    }
  EXPECT_LT(err, 5e-3);
  EXPECT_LT(m.beltrami_residual, 1e-8);
}

TEST(QCSolver, ConstantMuResidualAndConformalOutside) {
  Grid g({0, 0}, 1.5, 256);
  auto m = solve_mu_conformal(presets::constant_disk_mu(g, 0.5), 1e-10);
  EXPECT_LE(m.beltrami_residual, 1e-9);
  EXPECT_GT(m.iterations, 1);
  auto [fz, fzb] = wirtinger_derivatives(m.f);
  double outside = 0.0;
  for (int j = 2; j < g.n() - 2; ++j)
    for (int i = 2; i < g.n() - 2; ++i) {
      if (std::abs(g.node(i, j)) < 1.1) continue;
      outside = std::max(outside, std::abs(fzb(i, j)));
      ASSERT_GT(m.J(i, j), 0.0);
    }
  EXPECT_LT(outside, 1e-2);
  // The map is z + O(1/z): it approaches the identity away from the support.
  EXPECT_LT(std::abs(m(cplx(1.4, 0.0)) - cplx(1.4, 0.0)), 0.5 / 1.4);
}

TEST(QCSolver, FixedPointAndGmresAgree) {
  Grid g({0, 0}, 1.25, 128);
  auto mu = presets::constant_disk_mu(g, cplx(0.3, 0.2));
  QCSolveOptions a, b;
  a.method = QCMethod::fixed_point;
  b.method = QCMethod::gmres;
  auto ma = solve_mu_conformal(mu, a), mb = solve_mu_conformal(mu, b);
  double d = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) d = std::max(d, std::abs(ma.f.values[k] - mb.f.values[k]));
  EXPECT_LT(d, 1e-8);
}

TEST(QCSolver, RejectsNonEllipticAndMarginViolations) {
  Grid g({0, 0}, 1.25, 64);
  ComplexField mu(g, 0.0);
  mu(30, 31) = 1.0;
  EXPECT_THROW(solve_mu_conformal(mu, 1e-8), InvalidInput);
  EXPECT_THROW(solve_mu_conformal(presets::constant_disk_mu(g, 0.2, 1.2), 1e-8), InvalidInput);
}

TEST(QCSolver, IterationCapReported) {
  Grid g({0, 0}, 1.25, 64);
  QCSolveOptions o;
  o.max_iterations = 2;
  o.method = QCMethod::fixed_point;
  EXPECT_THROW(solve_mu_conformal(presets::constant_disk_mu(g, 0.4), o), NonConvergence);
}

TEST(Invert, IdentityMap) {
  Grid g({0, 0}, 1.25, 64);
  auto m = solve_mu_conformal(ComplexField(g, 0.0), 1e-10);
  EXPECT_NEAR(std::abs(invert(m, {0.3, 0.4}) - cplx(0.3, 0.4)), 0.0, 1e-9);
}

TEST(Invert, RadialStretchAndRoundTrip) {
  Grid g({0, 0}, 1.25, 256);
  auto m = solve_mu_conformal(presets::radial_stretch_mu(g, 2.0), 1e-10);
  EXPECT_NEAR(std::abs(invert(m, 0.25) - presets::radial_stretch_inverse(0.25, 2.0)), 0.0, 5e-3);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    const cplx w(u(rng), u(rng));
    const cplx z = invert(m, w);
    EXPECT_LT(std::abs(m(z) - w), 1e-6);
  }
}

TEST(Invert, OutsideImageThrows) {
  Grid g({0, 0}, 1.25, 64);
  auto m = solve_mu_conformal(ComplexField(g, 0.0), 1e-10);
  EXPECT_THROW(invert(m, {5.0, 0.0}), InvalidInput);
}

TEST(HomeomorphismProbe, HoldsForComputedMaps) {
  Grid g({0, 0}, 1.25, 128);
  EXPECT_TRUE(homeomorphism_probe(solve_mu_conformal(presets::radial_stretch_mu(g, 3.0), 1e-10), 0.01, 3));
  EXPECT_TRUE(homeomorphism_probe(solve_mu_conformal(presets::constant_disk_mu(g, {0.0, 0.6}), 1e-10), 0.01, 4));
}

TEST(HomeomorphismProbe, DetectsFoldedMap) {
  Grid g({0, 0}, 1.25, 64);
  QCMap m = solve_mu_conformal(ComplexField(g, 0.0), 1e-10);
  for (cplx& v : m.f.values) v = std::conj(v);
  EXPECT_FALSE(homeomorphism_probe(m, 0.05, 1));
}

TEST(TruncationLadder, ClipPreservesArgument) {
  Grid g({0, 0}, 1.25, 64);
  auto mu = presets::boundary_power_mu(g);
  auto c = clip_mu(mu, 4.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_LE(std::abs(c.values[k]), 0.6 + 1e-15);
    if (std::abs(mu.values[k]) > 0) EXPECT_NEAR(std::arg(c.values[k]), std::arg(mu.values[k]), 1e-12);
  }
}

TEST(TruncationLadder, ZeroMuConvergesAtFirstLevel) {
  Grid g({0, 0}, 1.25, 64);
  auto L = solve_degenerate(ComplexField(g, 0.0), disk_domain(0, 1), default_caps(), 1e-3);
  EXPECT_TRUE(L.converged);
  EXPECT_EQ(L.final_index, 0);
  ASSERT_EQ(L.convergence_trace.size(), 1u);
  EXPECT_EQ(L.convergence_trace[0], 0.0);
}

TEST(TruncationLadder, ExponentialClassConvergesMonotonically) {
  Grid g({0, 0}, 1.25, 128);
  QCSolveOptions o;
  o.tol = 1e-8;
  auto L = solve_degenerate(presets::boundary_log_mu(g), disk_domain(0, 1), default_caps(), 1e-3, o);
  EXPECT_TRUE(L.converged);
  for (std::size_t k = 1; k < L.convergence_trace.size(); ++k)
    EXPECT_LE(L.convergence_trace[k], L.convergence_trace[k - 1]);
  EXPECT_EQ(L.maps.size(), L.convergence_trace.size() + 1);
}

TEST(TruncationLadder, RejectsBadCaps) {
  Grid g({0, 0}, 1.25, 64);
  EXPECT_THROW(solve_degenerate(ComplexField(g, 0.0), disk_domain(0, 1), {4.0, 2.0}, 1e-3), InvalidInput);
  EXPECT_THROW(solve_degenerate(ComplexField(g, 0.0), disk_domain(0, 1), {}, 1e-3), InvalidInput);
}
