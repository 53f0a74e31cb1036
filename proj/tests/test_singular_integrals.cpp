#include <gtest/gtest.h>

#include "quadrature_oracles.hpp"
#include "qcdir/calculus.hpp"
#include "qcdir/singular_integrals.hpp"

using namespace qcdir;

namespace {

ComplexField disk_indicator(const Grid& g, double R) {
  return sample_complex(g, [R](cplx z) { return std::abs(z) < R ? cplx(1.0) : cplx(0.0); });
}

}  // namespace

TEST(CauchyOracle, DiskValuesFromQuadrature) {
  // Freezes the reference values used below.
  EXPECT_NEAR(std::abs(oracle::cauchy_disk(1.0, {0.0, 0.0})), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(oracle::cauchy_disk(1.0, {0.5, 0.0}) - 0.5), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(oracle::cauchy_disk(1.0, {2.0, 0.0}) - 0.5), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(oracle::cauchy_disk(0.5, {1.0, 0.0}) - 0.25), 0.0, 1e-8);
}

TEST(CauchyTransform, ZeroSource) {
  Grid g({0, 0}, 2.0, 64);
  EXPECT_EQ(max_abs(cauchy_transform(ComplexField(g, 0.0))), 0.0);
}

TEST(CauchyTransform, UnitDiskIndicator) {
  Grid g({0, 0}, 2.5, 256);
  auto H = cauchy_transform(disk_indicator(g, 1.0));
  EXPECT_NEAR(std::abs(interpolate_value(H, {0.0, 0.0})), 0.0, 1e-2);
  EXPECT_NEAR(std::abs(interpolate_value(H, {0.5, 0.0}) - 0.5), 0.0, 1e-2);
  EXPECT_NEAR(std::abs(interpolate_value(H, {2.0, 0.0}) - 0.5), 0.0, 1e-2);
}

TEST(CauchyTransform, HalfDiskIndicator) {
  Grid g({0, 0}, 2.0, 256);
  auto H = cauchy_transform(disk_indicator(g, 0.5));
  EXPECT_NEAR(std::abs(interpolate_value(H, {1.0, 0.0}) - 0.25), 0.0, 5e-3);
  EXPECT_NEAR(std::abs(interpolate_value(H, {0.2, 0.3}) - cplx(0.2, -0.3)), 0.0, 1e-2);
}

TEST(CauchyTransform, RejectsSupportInMargin) {
  Grid g({0, 0}, 1.0, 64);
  EXPECT_THROW(cauchy_transform(disk_indicator(g, 0.95)), InvalidInput);
}

TEST(CauchyTransform, LinearAndRightInverseOfDbar) {
  Grid g({0, 0}, 4.0, 256);
  auto s1 = sample_complex(g, [](cplx z) { return std::exp(-4.0 * std::norm(z)); });
  auto s2 = sample_complex(g, [](cplx z) { return z * std::exp(-3.0 * std::norm(z - cplx(0.3, 0))); });
  ComplexField sum(g);
  for (std::size_t k = 0; k < g.size(); ++k) sum.values[k] = 2.0 * s1.values[k] - cplx(0, 1) * s2.values[k];
  auto h1 = cauchy_transform(s1), h2 = cauchy_transform(s2), hs = cauchy_transform(sum);
  for (std::size_t k = 0; k < g.size(); ++k)
    ASSERT_NEAR(std::abs(hs.values[k] - (2.0 * h1.values[k] - cplx(0, 1) * h2.values[k])), 0.0, 1e-12);
  auto [dz, dzb] = wirtinger_derivatives(h1);
  ComplexField err(g);
  for (std::size_t k = 0; k < g.size(); ++k) err.values[k] = dzb.values[k] - s1.values[k];
  EXPECT_LE(l2_norm(err) / l2_norm(s1), 5e-3);
}

TEST(LogPotentialOracle, DiskValuesFromQuadrature) {
  EXPECT_NEAR(oracle::log_potential_disk(1.0, {0, 0}), -0.25, 1e-9);
  EXPECT_NEAR(oracle::log_potential_disk(1.0, {1, 0}), 0.0, 1e-8);
  EXPECT_NEAR(oracle::log_potential_disk(1.0, {2, 0}), 0.5 * std::log(2.0), 1e-8);
  EXPECT_NEAR(oracle::log_potential_disk(0.5, {1, 0}), 0.0, 1e-8);
}

TEST(LogPotential, ZeroSource) {
  Grid g({0, 0}, 2.0, 64);
  EXPECT_EQ(max_abs(log_potential(RealField(g, 0.0))), 0.0);
}

TEST(LogPotential, DiskIndicatorMatchesQuadrature) {
  Grid g({0, 0}, 2.5, 512);
  auto G = real_part(disk_indicator(g, 1.0));
  auto N = log_potential(G);
  EXPECT_NEAR(interpolate_value(N, {0, 0}), oracle::log_potential_disk(1.0, {0, 0}), 1e-2);
  EXPECT_NEAR(interpolate_value(N, {1, 0}), oracle::log_potential_disk(1.0, {1, 0}), 1e-2);
  EXPECT_NEAR(interpolate_value(N, {2, 0}), oracle::log_potential_disk(1.0, {2, 0}), 1e-2);
}

TEST(LogPotential, OriginCellAverageFormula) {
  // Mean of ln|z| over [-a, a]^2 against brute-force midpoint quadrature.
  const double h = 0.1, a = h / 2;
  double s = 0.0;
  const int m = 2000;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const double x = -a + (i + 0.5) * h / m, y = -a + (j + 0.5) * h / m;
      s += std::log(std::hypot(x, y));
    }
  s /= static_cast<double>(m) * m;
  EXPECT_NEAR(detail::kernel_origin_average(KernelKind::log_potential, h).real() * 2 * kPi, s, 1e-5);
}

TEST(LogPotential, LaplacianRecoversSmoothSource) {
  Grid g({0, 0}, 3.0, 256);
  auto G = sample_real(g, [](cplx z) { return std::exp(-4.0 * std::norm(z)); });
  auto lap = laplacian(log_potential(G));
  RealField err(g);
  for (int j = 2; j + 2 < g.n(); ++j)
    for (int i = 2; i + 2 < g.n(); ++i) err(i, j) = lap(i, j) - G(i, j);
  EXPECT_LE(l2_norm(err) / l2_norm(G), 5e-3);
}

TEST(Beurling, ZeroSource) {
  Grid g({0, 0}, 2.0, 64);
  EXPECT_EQ(max_abs(beurling_transform(ComplexField(g, 0.0))), 0.0);
}

TEST(Beurling, IntertwinesDbarAndDz) {
  // F = conj(z) exp(-|z|^2): F_zbar = (1 - |z|^2) e^{-|z|^2}, F_z = -conj(z)^2 e^{-|z|^2}.
  Grid g({0, 0}, 4.0, 512);
  auto h = sample_complex(g, [](cplx z) { return (1.0 - std::norm(z)) * std::exp(-std::norm(z)); });
  auto fz = sample_complex(g, [](cplx z) { return -std::conj(z) * std::conj(z) * std::exp(-std::norm(z)); });
  // The Gaussian tail reaches the margin at the 1e-5 level; not compactly supported.
  auto bh = beurling_transform(h, false);
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(bh.values[k] - fz.values[k]));
  EXPECT_LE(err, 1e-3);
  EXPECT_NEAR(l2_norm(bh) / l2_norm(h), 1.0, 1e-6);
}

TEST(Regularity, CauchyOfDiskIsLipschitz) {
  Grid g({0, 0}, 2.0, 256);
  auto H = cauchy_transform(disk_indicator(g, 1.0));
  auto rep = verify_regularity(H, std::numeric_limits<double>::infinity());
  EXPECT_FALSE(rep.flat);
  EXPECT_GE(rep.exponent, 0.9);
  EXPECT_TRUE(rep.pass);
}

TEST(Regularity, PotentialOfDiskHasBoundedGradientIncrements) {
  Grid g({0, 0}, 2.0, 256);
  auto N = log_potential(real_part(disk_indicator(g, 1.0)));
  auto rep = verify_regularity(N, std::numeric_limits<double>::infinity(), Smoothness::c1);
  EXPECT_GE(rep.exponent, 0.9);
  EXPECT_TRUE(rep.pass);
}

TEST(Regularity, ZeroFieldIsFlat) {
  Grid g({0, 0}, 2.0, 64);
  auto rep = verify_regularity(ComplexField(g, 0.0), 3.0);
  EXPECT_TRUE(rep.flat);
}
