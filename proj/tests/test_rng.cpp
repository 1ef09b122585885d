#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "sdiff/rng.hpp"

using namespace sdiff;

// Known-answer vectors for Philox4x32-10 from the Random123 distribution
// (kat_vectors), with counter = {ctr0, ctr1, ctr2, ctr3} and key = {k0, k1}.
TEST(Philox, KnownAnswerZeroKey) {
  Philox rng(0, 0);
  EXPECT_EQ(rng(), 0x6627e8d5u);
  EXPECT_EQ(rng(), 0xe169c58du);
  EXPECT_EQ(rng(), 0xbc57ac4cu);
  EXPECT_EQ(rng(), 0x9b00dbd8u);
}

TEST(Philox, FullWidthSeedAndStream) {
  Philox rng(0xffffffffffffffffull, 0xffffffffffffffffull);
  std::set<std::uint32_t> seen;
  for (int i = 0; i < 64; ++i) seen.insert(rng());
  EXPECT_GT(seen.size(), 60u);
}

TEST(Philox, StreamsAreDistinctAndReproducible) {
  Philox a(7, 0), b(7, 1), c(7, 0);
  int same = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a(), y = b();
    EXPECT_EQ(x, c());
    same += x == y;
  }
  EXPECT_LT(same, 3);
  EXPECT_EQ(a.seed(), 7u);
  EXPECT_EQ(b.stream(), 1u);
}

TEST(Philox, WorksWithStandardDistributions) {
  Philox rng(3);
  std::uniform_int_distribution<int> d(0, 9);
  for (int i = 0; i < 100; ++i) {
    const int v = d(rng);
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 9);
  }
}

TEST(Distributions, UniformMoments) {
  Philox rng(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 3 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12, 2e-3);
}

TEST(Distributions, UniformBelowIsUnbiased) {
  Philox rng(12);
  std::vector<int> hist(7, 0);
  const int n = 140000;
  for (int i = 0; i < n; ++i) ++hist[uniform_below(rng, 7)];
  for (int h : hist) EXPECT_NEAR(h, n / 7.0, 4 * std::sqrt(n / 7.0));
}

TEST(Distributions, NormalMoments) {
  Philox rng(13);
  NormalSampler normal;
  const int n = 400000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = normal(rng);
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 3 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 3 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 3 * std::sqrt(96.0 / n));
}

TEST(Distributions, PoissonMeanAndVariance) {
  Philox rng(14);
  for (double mean : {0.01, 0.3, 4.0, 50.0}) {
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = poisson(rng, mean);
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    EXPECT_NEAR(m, mean, 4 * std::sqrt(mean / n)) << mean;
    EXPECT_NEAR(s2 / n - m * m, mean, 0.05 * mean + 1e-3) << mean;
  }
  EXPECT_EQ(poisson(rng, 0.0), 0u);
}

TEST(Distributions, GeometricMean) {
  Philox rng(15);
  for (double p : {1.0, 0.5, 0.01}) {
    const int n = 200000;
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const auto k = geometric_trials(rng, p);
      ASSERT_GE(k, 1u);
      s += static_cast<double>(k);
    }
    const double sd = std::sqrt((1 - p) / (p * p) / n);
    EXPECT_NEAR(s / n, 1 / p, 4 * sd + 1e-12) << p;
  }
}

TEST(Distributions, ExponentialMean) {
  Philox rng(16);
  const int n = 200000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += exponential(rng, 691.0);
  EXPECT_NEAR(s / n, 691.0, 4 * 691.0 / std::sqrt(n));
}
