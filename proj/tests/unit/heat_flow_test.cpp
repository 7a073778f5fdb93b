#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "dkfd/heat_flow.hpp"
#include "dkfd/stats.hpp"

using namespace dkfd;

TEST(TestFunction, CosineCoefficientsAndNorm) {
  const TestFunction c = TestFunction::cosine(3, 16);
  EXPECT_NEAR(c.coefficient(3).real(), 0.5, 1e-14);
  EXPECT_NEAR(c.coefficient(-3).real(), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(c.coefficient(2)), 0.0, 1e-14);
  EXPECT_NEAR(c.l2_norm_squared(), kPi, 1e-12);
  EXPECT_NEAR(c.normalized_l2().l2_norm_squared(), 1.0, 1e-12);
  EXPECT_LT(c.representation_error(101), 1e-13);
  EXPECT_THROW(TestFunction::constant(0.0, 8).normalized_l2(), std::invalid_argument);
}

TEST(TestFunction, DerivativeAndSquare) {
  const TestFunction s = TestFunction::sine(2, 16);
  const TestFunction ds = s.derivative();
  const TestFunction sq = s.squared();
  for (double x : {-3.0, -1.1, 0.0, 0.4, 2.9}) {
    EXPECT_NEAR(ds(x), 2.0 * std::cos(2 * x), 1e-12);
    EXPECT_NEAR(sq(x), std::sin(2 * x) * std::sin(2 * x), 1e-12);
  }
  EXPECT_NEAR(sq.coefficient(0).real(), 0.5, 1e-13);
}

TEST(TestFunction, SmoothProfilesAreResolved) {
  const TestFunction b = TestFunction::from_closure(profiles::bump6);
  EXPECT_LT(b.representation_error(257), 1e-10);
  EXPECT_NEAR(profiles::bump6(0.0), 1.0, 1e-15);
  EXPECT_NEAR(profiles::bump8(kPi), 3.0 - 2.0 * std::exp(-1.0 / 0.03), 1e-15);
  EXPECT_NEAR(profiles::cusp(kPi), 0.5, 1e-15);
}

TEST(SpectralSymbol, ValuesAndLongWaveLimit) {
  const Grid g = Grid::line(8);
  const SpectralSymbol P = laplacian_symbol(g);
  EXPECT_DOUBLE_EQ(P({0, 0, 0}), 0.0);
  EXPECT_NEAR(P({1, 0, 0}), 0.4748206, 1e-7);
  const Grid fine = Grid::line(1024);
  EXPECT_NEAR(SpectralSymbol(fine)({3, 0, 0}), 4.5, 1e-3);
  std::stringstream ss;
  P.write_csv(ss);
  EXPECT_NE(ss.str().find("xi"), std::string::npos);
}

TEST(HeatFlow, ContinuousFlowOfCosine) {
  const TestFunction c = continuous_backward_flow(TestFunction::cosine(2, 8), 0.3);
  EXPECT_NEAR(c(0.7), std::exp(-0.6) * std::cos(1.4), 1e-13);
  EXPECT_THROW(continuous_backward_flow(c, -0.1), std::invalid_argument);
}

TEST(HeatFlow, DiscreteFlowEigenmode) {
  const Grid g = Grid::line(16);
  const double h = g.spacing();
  const GridFunction c = interpolate([](double x) { return std::cos(3 * x); }, g);
  const double P = 2.0 * (1 - std::cos(3 * h)) / (2 * h * h);
  const GridFunction out = discrete_backward_flow(c, 0.25);
  EXPECT_LT(max_abs(out - std::exp(-P * 0.25) * c), 1e-13);
  EXPECT_LT(max_abs(discrete_forward_flow(c, 0.0) - c), 0.0 + 1e-300);
  EXPECT_THROW(discrete_forward_flow(c, -1.0), std::invalid_argument);
}

TEST(HeatFlow, SemigroupMassAndMaximumPrinciple) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (const Grid& g : {Grid::line(32), Grid(2, 8)}) {
    GridFunction rho(g);
    for (auto& v : rho.values()) v = u(rng);
    const GridFunction ab = discrete_forward_flow(discrete_forward_flow(rho, 0.1), 0.2);
    const GridFunction once = discrete_forward_flow(rho, 0.3);
    EXPECT_LT(max_abs(ab - once), 1e-12);
    EXPECT_NEAR(mass(once), mass(rho), 1e-11);
    EXPECT_GE(once.min(), rho.min() - 1e-12);
    EXPECT_LE(once.max(), rho.max() + 1e-12);
  }
}

TEST(HeatFlow, CommutesWithDifferenceOperators) {
  const Grid g = Grid::line(24);
  const GridFunction u = interpolate(profiles::bump6, g);
  EXPECT_LT(max_abs(apply_laplacian(discrete_backward_flow(u, 0.2)) - discrete_backward_flow(apply_laplacian(u), 0.2)),
            1e-11);
  EXPECT_LT(max_abs(apply_gradient(discrete_backward_flow(u, 0.2)).front() -
                    discrete_backward_flow(apply_gradient(u).front(), 0.2)),
            1e-11);
}

TEST(HeatFlow, GeneratorMatchesLaplacian) {
  const Grid g = Grid::line(32);
  const GridFunction u = interpolate(profiles::bump6, g);
  const double eps = 1e-6;
  const GridFunction fd = (1.0 / eps) * (discrete_forward_flow(u, eps) - u);
  EXPECT_LT(max_abs(fd - 0.5 * apply_laplacian(u)), 1e-4);
}

TEST(HeatFlow, BackwardFlowErrorIsSecondOrder) {
  const TestFunction phi = TestFunction::from_closure(profiles::bump6);
  std::vector<double> h, e;
  for (int k = 4; k <= 8; ++k) {
    const Grid g = Grid::line(1 << k);
    h.push_back(g.spacing());
    e.push_back(backward_flow_error(phi, g, 0.4));
  }
  EXPECT_NEAR(fit_loglog(h, e).slope, 2.0, 0.1);
  const TestFunction c = TestFunction::cosine(3, 16);
  std::vector<double> hc, ec;
  for (int k = 4; k <= 8; ++k) {
    const Grid g = Grid::line(1 << k);
    hc.push_back(g.spacing());
    ec.push_back(backward_flow_error(c, g, 0.4));
  }
  EXPECT_NEAR(fit_loglog(hc, ec).slope, 2.0, 0.05);
  EXPECT_NEAR(backward_flow_error(c, Grid::line(64), 0.0), 0.0, 1e-13);
}

TEST(HeatFlow, GradientErrorsAreSecondOrder) {
  const TestFunction c = TestFunction::cosine(3, 16);
  const TestFunction s = TestFunction::sine(1, 16);
  const double r1 = backward_gradient_error(c, Grid::line(64), 0.2) / backward_gradient_error(c, Grid::line(128), 0.2);
  const double r2 =
      gradient_product_error(c, s, Grid::line(64), 0.2) / gradient_product_error(c, s, Grid::line(128), 0.2);
  EXPECT_NEAR(std::log2(r1), 2.0, 0.05);
  EXPECT_NEAR(std::log2(r2), 2.0, 0.1);
}

TEST(HeatFlow, GradientSquaredAfterFlow) {
  const TestFunction c = TestFunction::cosine(1, 16);
  const TestFunction g = gradient_squared_after_flow(c, 0.5);
  for (double x : {-2.0, 0.3, 1.7}) {
    const double d = std::exp(-0.25) * std::sin(x);
    EXPECT_NEAR(g(x), d * d, 1e-12);
  }
}
