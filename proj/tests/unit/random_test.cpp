#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dkfd/random.hpp"
#include "dkfd/stats.hpp"

using namespace dkfd;

TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStream, ReproducibleAndAddressable) {
  RandomStream a(42, 7, Subsystem::dk_noise), b(42, 7, Subsystem::dk_noise);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());

  // realization r gives the same numbers no matter which realizations were drawn before it
  std::vector<double> first;
  {
    RandomStream r(42, 3, Subsystem::particles);
    for (int i = 0; i < 10; ++i) first.push_back(r.uniform());
  }
  RandomStream other(42, 9, Subsystem::particles);
  for (int i = 0; i < 50; ++i) other.uniform();
  RandomStream again(42, 3, Subsystem::particles);
  for (double v : first) EXPECT_EQ(again.uniform(), v);
}

TEST(RandomStream, StreamsAreDistinct) {
  RandomStream a(1, 0, Subsystem::particles), b(1, 1, Subsystem::particles), c(1, 0, Subsystem::dk_noise),
      d(2, 0, Subsystem::particles);
  const double x = a.uniform();
  EXPECT_NE(x, b.uniform());
  EXPECT_NE(x, c.uniform());
  EXPECT_NE(x, d.uniform());
}

TEST(RandomStream, UniformAndNormalMoments) {
  RandomStream r(2024, 0, Subsystem::noise_check);
  RunningStats u, n, n2, n4;
  const int count = 400000;
  for (int i = 0; i < count; ++i) {
    const double v = r.uniform();
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
    u.add(v);
  }
  for (int i = 0; i < count; ++i) {
    const double z = r.normal();
    n.add(z);
    n2.add(z * z);
    n4.add(z * z * z * z);
  }
  EXPECT_NEAR(u.mean(), 0.5, 5 * std::sqrt(1.0 / 12 / count));
  EXPECT_NEAR(u.variance(), 1.0 / 12, 0.002);
  EXPECT_NEAR(n.mean(), 0.0, 5 / std::sqrt(count));
  EXPECT_NEAR(n2.mean(), 1.0, 5 * n2.stderr_of_mean());
  EXPECT_NEAR(n4.mean(), 3.0, 5 * n4.stderr_of_mean());
}

TEST(RandomStream, FillNormalScales) {
  RandomStream a(5, 0, Subsystem::dk_noise), b(5, 0, Subsystem::dk_noise);
  std::vector<double> v(9);
  a.fill_normal(v, 0.5);
  for (double x : v) EXPECT_EQ(x, 0.5 * b.normal());
}

TEST(Stats, RunningStatsMergeAndFits) {
  RunningStats all, left, right;
  for (int i = 0; i < 10; ++i) {
    const double x = i * i - 3.0;
    all.add(x);
    (i < 4 ? left : right).add(x);
  }
  left.merge(right);
  EXPECT_NEAR(left.mean(), all.mean(), 1e-12);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-10);
  EXPECT_EQ(left.count(), 10u);

  const std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
  const LineFit f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.slope_stderr, 0.0, 1e-10);
  const std::vector<double> a{0, 1}, b{1, 3};
  EXPECT_NEAR(fit_line(a, b).slope, 2.0, 1e-14);
}
