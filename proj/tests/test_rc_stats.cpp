#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sdiff/rc_stats.hpp"

using namespace sdiff;

TEST(ExpectedAttempts, SingleQubitIsGeometricMean) {
  for (double m : {1.0, 2.0, 7.5, 1000.0}) {
    EXPECT_NEAR(expected_attempts_closed(1, m), m, 1e-12 * m);
    EXPECT_NEAR(expected_attempts_tailsum(1, m), m, 1e-9 * m);
  }
}

TEST(ExpectedAttempts, TwoQubitsMeanTwo) {
  EXPECT_NEAR(expected_attempts_closed(2, 2.0), 8.0 / 3.0, 1e-14);
  EXPECT_NEAR(expected_attempts_tailsum(2, 2.0, 1e-12), 8.0 / 3.0, 1e-11);
}

TEST(ExpectedAttempts, TwelveQubitsReference) {
  const double reference = 309.2668634605428831;
  EXPECT_NEAR(expected_attempts_closed(12, 100.0), reference, 1e-9 * reference);
  EXPECT_NEAR(expected_attempts_tailsum(12, 100.0), reference, 1e-9 * reference);
}

TEST(ExpectedAttempts, CertainSuccess) {
  for (int n : {1, 5, 40}) {
    EXPECT_EQ(expected_attempts_closed(n, 1.0), 1.0);
    EXPECT_EQ(expected_attempts_tailsum(n, 1.0), 1.0);
  }
}

TEST(ExpectedAttempts, RejectsBadInput) {
  EXPECT_THROW(expected_attempts_closed(0, 2.0), std::invalid_argument);
  EXPECT_THROW(expected_attempts_closed(2, 0.5), std::invalid_argument);
  EXPECT_THROW(expected_attempts_tailsum(2, 2.0, 0.0), std::invalid_argument);
}

TEST(ExpectedAttempts, ClosedFormMatchesTailSumOnGrid) {
  for (int n = 1; n <= 12; ++n)
    for (double m : {2.0, 10.0, 100.0, 1000.0}) {
      const double c = expected_attempts_closed(n, m);
      EXPECT_LT(std::abs(c - expected_attempts_tailsum(n, m, 1e-12)) / c, 1e-9) << n << " " << m;
    }
}

TEST(ExpectedAttempts, LargeNFallsBackAccurately) {
  const double a = expected_attempts_closed(64, 50.0);
  EXPECT_NEAR(a, expected_attempts_tailsum(64, 50.0, 1e-14), 1e-9 * a);
}

TEST(ExpectedAttempts, MonotoneAndBoundedBelowByM) {
  for (double m : {2.0, 10.0, 100.0, 1000.0}) {
    double prev = 0.0;
    for (int n = 1; n <= 12; ++n) {
      const double e = expected_attempts_closed(n, m);
      EXPECT_GT(e, prev);
      if (n == 1)
        EXPECT_NEAR(e, m, 1e-12 * m);
      else
        EXPECT_GT(e, m);
      prev = e;
    }
  }
  for (int n = 1; n <= 12; ++n) {
    double prev = 0.0;
    for (double m : {1.5, 2.0, 10.0, 100.0, 1000.0}) {
      const double e = expected_attempts_closed(n, m);
      EXPECT_GT(e, prev);
      prev = e;
    }
  }
}

TEST(ExpectedAttempts, HarmonicAsymptote) {
  for (int n : {1, 2, 3, 6, 12}) {
    double h = 0.0;
    for (int k = 1; k <= n; ++k) h += 1.0 / k;
    EXPECT_NEAR(expected_attempts_closed(n, 1e6) / (1e6 * h), 1.0, 0.01) << n;
  }
}

TEST(Speedup, NoNarrowingIsPureOverhead) {
  RCProtocolParams p;
  p.eta_sd = p.eta_sd_rc = 0.2;
  p.eta_det = 0.5;
  for (int n = 1; n <= 8; ++n) {
    p.n_qubits = n;
    const double s = speedup(p);
    EXPECT_NEAR(s, 1.0 / (1.0 + expected_attempts_closed(n, p.mean_attempts())), 1e-15);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Speedup, TwoQubitReference) {
  RCProtocolParams p;
  p.n_qubits = 2;
  p.eta_sd = 0.01;
  p.eta_sd_rc = 0.35;
  p.eta_det = 0.5;
  EXPECT_NEAR(speedup(p), 4.073158942991191593, 1e-12);
  EXPECT_NEAR(time_independent_check(p) / time_resonance_check(p), speedup(p), 1e-12 * speedup(p));
}

TEST(Speedup, MonteCarloOracleWithTimeAccounting) {
  // Without checks an attempt succeeds with (eta_sd eta_det)^N; with checks
  // each attempt costs 1 + T rounds and succeeds with (eta_sd_rc eta_det)^N.
  RCProtocolParams p;
  p.n_qubits = 2;
  p.eta_sd = 0.01;
  p.eta_sd_rc = 0.35;
  p.eta_det = 0.5;
  const auto mc = mc_attempts(2, p.mean_attempts(), 1000000, 808);
  const double t_rc = p.tau_attempt_ns * (1.0 + mc.mean) * std::pow(1.0 / (p.eta_sd_rc * p.eta_det), 2);
  const double ratio = time_independent_check(p) / t_rc;
  const double ratio_err = ratio * mc.stderr_mean / (1.0 + mc.mean);
  EXPECT_NEAR(speedup(p), ratio, 3 * ratio_err);
}

TEST(Speedup, ExceedsOneForLargeN) {
  RCProtocolParams p;
  p.eta_sd = 0.01;
  p.eta_sd_rc = 0.03;
  p.eta_det = 0.5;
  p.n_qubits = 1;
  EXPECT_LT(speedup(p), 1.0);
  p.n_qubits = 30;
  EXPECT_GT(speedup(p), 1.0);
}

TEST(Speedup, ValidatesParameters) {
  RCProtocolParams p;
  p.eta_sd_rc = p.eta_sd / 2;
  EXPECT_THROW(speedup(p), std::invalid_argument);
  p = {};
  p.n_qubits = 0;
  EXPECT_THROW(speedup(p), std::invalid_argument);
  p = {};
  p.eta_det = 0;
  EXPECT_THROW(speedup(p), std::invalid_argument);
}

TEST(SpeedupGrid, CellsMatchScalarCallsBitwise) {
  const std::vector<int> ns{1, 2, 3, 4, 6, 8, 12};
  const std::vector<double> etas{0.01, 0.05, 0.2, 0.5, 1.0};
  const auto grid = speedup_grid(ns, etas, 0.0084, 0.29);
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (std::size_t j = 0; j < etas.size(); ++j) {
      RCProtocolParams p{ns[i], 0.0084, 0.29, etas[j]};
      EXPECT_EQ(grid.at(i, j).speedup, speedup(p));
      EXPECT_EQ(grid.at(i, j).no_speedup, speedup(p) <= 1.0);
    }
}

TEST(SpeedupGrid, NoNarrowingFlagsEverything) {
  const auto grid = speedup_grid({1, 2, 5, 12}, {0.01, 0.1, 1.0}, 0.05, 0.05);
  for (const auto& c : grid.cells) EXPECT_TRUE(c.no_speedup);
}

TEST(SpeedupGrid, IncreasesWithNBeyondMinimum) {
  std::vector<int> ns;
  for (int n = 1; n <= 20; ++n) ns.push_back(n);
  const auto grid = speedup_grid(ns, {0.05, 0.3, 1.0}, 0.0084, 0.29);
  for (std::size_t j = 0; j < 3; ++j) {
    std::size_t arg_min = 0;
    for (std::size_t i = 1; i < ns.size(); ++i)
      if (grid.at(i, j).speedup < grid.at(arg_min, j).speedup) arg_min = i;
    for (std::size_t i = arg_min + 1; i < ns.size(); ++i) EXPECT_GT(grid.at(i, j).speedup, grid.at(i - 1, j).speedup);
  }
}

TEST(SpeedupGrid, CsvFormat) {
  std::ostringstream out;
  write_grid_csv(out, speedup_grid({2}, {0.5}, 0.01, 0.01));
  EXPECT_EQ(out.str().substr(0, 26), "N,eta_det,speedup,flag_le1");
  EXPECT_NE(out.str().find(",1\n"), std::string::npos);
  EXPECT_THROW(speedup_grid({}, {0.5}, 0.01, 0.02), std::invalid_argument);
}

TEST(McAttempts, SingleQubit) {
  const auto e = mc_attempts(1, 10.0, 1000000, 1);
  EXPECT_NEAR(e.mean, 10.0, 3 * e.stderr_mean);
}

TEST(McAttempts, TwelveQubits) {
  const auto e = mc_attempts(12, 100.0, 1000000, 2);
  EXPECT_NEAR(e.mean, expected_attempts_closed(12, 100.0), 3 * e.stderr_mean);
}

TEST(McAttempts, CertainSuccess) {
  const auto e = mc_attempts(5, 1.0, 1000, 3);
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.stderr_mean, 0.0);
}

TEST(McAttempts, ThreadIndependent) {
  const auto a = mc_attempts(3, 20.0, 300000, 4, 1);
  const auto b = mc_attempts(3, 20.0, 300000, 4, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stderr_mean, b.stderr_mean);
}
