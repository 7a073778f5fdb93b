#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "dkfd/particles.hpp"
#include "dkfd/stats.hpp"

using namespace dkfd;

namespace {

/// Node weights 1, 2, 3, 4 on the four-node grid.
double ramp(double x) { return std::round((x + kPi) / (kPi / 2)) + 1.0; }

/// All mass at x = 0.
double spike(double x) { return std::abs(x) < 1e-9 ? 1.0 : 0.0; }

}  // namespace

TEST(Particles, WrapToTorus) {
  EXPECT_DOUBLE_EQ(wrap_to_torus(0.5), 0.5);
  EXPECT_NEAR(wrap_to_torus(kPi + 0.25), -kPi + 0.25, 1e-14);
  EXPECT_NEAR(wrap_to_torus(-kPi - 0.25), kPi - 0.25, 1e-14);
  EXPECT_NEAR(wrap_to_torus(7 * kTwoPi + 1.0), 1.0, 1e-12);
  const double w = wrap_to_torus(kPi);
  EXPECT_GE(w, -kPi);
  EXPECT_LT(w, kPi);
}

TEST(Placement, LargestRemainder) {
  // quotas 0.7 1.4 2.1 2.8 -> floors 0 1 2 2, remainders go to nodes 3 and 0
  const InitialPlacement p = place_particles(ramp, Grid::line(4), 7);
  EXPECT_EQ(p.counts, (std::vector<long>{1, 1, 2, 3}));
  // quotas 0.4 0.8 1.2 1.6 -> 0 0 1 1, remainders to nodes 1 and 3; node 0 borrows from the
  // largest surplus
  const InitialPlacement q = place_particles(ramp, Grid::line(4), 4);
  EXPECT_EQ(std::accumulate(q.counts.begin(), q.counts.end(), 0L), 4);
  for (long c : q.counts) EXPECT_GE(c, 1);
}

TEST(Placement, UniformDensityFillsEveryNode) {
  const InitialPlacement p = place_particles([](double) { return 1.0; }, Grid::line(8), 8);
  for (long c : p.counts) EXPECT_EQ(c, 1);
  EXPECT_NEAR(mass(p.matched_density), 1.0, 1e-14);
}

TEST(Placement, MatchedDensityReproducesPairings) {
  const Grid g = Grid::line(32);
  const InitialPlacement p = place_particles(profiles::bump6, g, 1000);
  EXPECT_EQ(std::accumulate(p.counts.begin(), p.counts.end(), 0L), 1000);
  EXPECT_NEAR(mass(p.matched_density), 1.0, 1e-13);
  const auto eta = [](double x) { return std::sin(2 * x) + x * x; };
  EXPECT_NEAR(p.average_over_particles(eta), inner_product(p.matched_density, interpolate(eta, g)), 1e-12);
}

TEST(Placement, RejectsInvalidInput) {
  EXPECT_THROW(place_particles([](double) { return 1.0; }, Grid::line(256), 100), std::invalid_argument);
  EXPECT_THROW(place_particles([](double) { return -1.0; }, Grid::line(8), 100), std::invalid_argument);
  EXPECT_THROW(place_particles([](double) { return 0.0; }, Grid::line(8), 100), std::invalid_argument);
  EXPECT_THROW(place_particles([](double) { return 1.0; }, Grid(2, 8), 100), std::invalid_argument);
}

TEST(Ensemble, StartsOnPlacementAndAdvances) {
  const InitialPlacement p = place_particles(ramp, Grid::line(4), 7);
  ParticleEnsemble e(p, 1, 0);
  EXPECT_EQ(e.size(), 7u);
  EXPECT_DOUBLE_EQ(e.positions().front(), -kPi);
  const auto before = e.positions();
  e.advance(0.0);
  EXPECT_EQ(e.positions(), before);
  EXPECT_THROW(e.advance(-0.1), std::invalid_argument);
  e.advance_to(0.3);
  EXPECT_DOUBLE_EQ(e.clock(), 0.3);
  for (double x : e.positions()) {
    EXPECT_GE(x, -kPi);
    EXPECT_LT(x, kPi);
  }
  ParticleEnsemble f(p, 1, 0);
  f.advance(0.3);
  EXPECT_EQ(e.positions(), f.positions());
}

TEST(Ensemble, VarianceOracleClosedForm) {
  // single particle from 0: Var cos(W_t) = 1/2 + 1/2 e^{-2t} - e^{-t}
  const InitialPlacement p = place_particles(spike, Grid::line(8), 1);
  const TestFunction c = TestFunction::cosine(1, 16);
  EXPECT_NEAR(particle_variance_oracle(p, c, 0.4), 0.5 + 0.5 * std::exp(-0.8) - std::exp(-0.4), 1e-12);
  EXPECT_NEAR(expected_pairing(p, c, 0.4), std::exp(-0.2), 1e-12);
  EXPECT_EQ(particle_variance_oracle(p, c, 0.0), 0.0);
}

TEST(Ensemble, MonteCarloMatchesOracles) {
  const InitialPlacement p = place_particles(profiles::bump6, Grid::line(16), 64);
  const TestFunction phi = TestFunction::cosine(2, 16);
  RunningStats pairing, centered_sq;
  const double mean = expected_pairing(p, phi, 0.4);
  const int M = 20000;
  for (int r = 0; r < M; ++r) {
    ParticleEnsemble e(p, 99, static_cast<std::uint64_t>(r));
    e.advance_to(0.4);
    const double v = pair_with(e, phi);
    pairing.add(v);
    centered_sq.add((v - mean) * (v - mean));
  }
  EXPECT_NEAR(pairing.mean(), mean, 4 * pairing.stderr_of_mean());
  const double var = particle_variance_oracle(p, phi, 0.4);
  EXPECT_NEAR(centered_sq.mean(), var, 4 * centered_sq.stderr_of_mean());
}

TEST(PeriodicTable, InterpolatesSmoothFunctions) {
  const TestFunction b = TestFunction::from_closure(profiles::bump6);
  const PeriodicTable t(b);
  double worst = 0.0;
  for (int j = 0; j < 5000; ++j) {
    const double x = -kPi + kTwoPi * (j + 0.123) / 5000;
    worst = std::max(worst, std::abs(t(x) - b(x)));
  }
  EXPECT_LT(worst, 1e-10);
  EXPECT_NEAR(t(std::nextafter(kPi, 0.0)), b(-kPi), 1e-10);
  EXPECT_THROW(PeriodicTable(b, 2), std::invalid_argument);
}

TEST(Ensemble, SnapshotCsv) {
  const InitialPlacement p = place_particles(ramp, Grid::line(4), 7);
  ParticleEnsemble e(p, 1, 3);
  std::stringstream ss;
  write_snapshot_csv(ss, e, 3, true);
  std::string line;
  int rows = 0;
  std::getline(ss, line);
  EXPECT_EQ(line, "realization,time,particle,x");
  while (std::getline(ss, line)) ++rows;
  EXPECT_EQ(rows, 7);
}
