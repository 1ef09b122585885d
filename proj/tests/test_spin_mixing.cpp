#include <gtest/gtest.h>

#include <cmath>

#include "sdiff/inference.hpp"
#include "sdiff/spin_mixing.hpp"

using namespace sdiff;

namespace {
SpinMixModel model(double gamma_t) {
  SpinMixModel m;
  m.pulse_duration_ns = 100.0;
  m.gamma_mix_per_ns = gamma_t / m.pulse_duration_ns;
  return m;
}
}  // namespace

TEST(SpinMixing, NoMixingGivesZeroRatio) {
  const auto p = spin_mix_populations(model(0.0));
  EXPECT_EQ(p.n1, 0.0);
  EXPECT_GT(p.n2, 0.0);
}

TEST(SpinMixing, FastMixingSaturates) {
  const auto p = spin_mix_populations(model(40.0));
  EXPECT_NEAR(p.n1 / p.n2, 1.0, 1e-12);
}

TEST(SpinMixing, RatioIsTanh) {
  for (double gt : {0.01, 0.1, 0.5, 1.0, 2.0}) {
    const auto p = spin_mix_populations(model(gt));
    EXPECT_NEAR(p.n1 / p.n2, std::tanh(gt), 1e-12) << gt;
  }
}

TEST(SpinMixing, ImperfectInitializationReducesContrast) {
  auto m = model(0.3);
  m.init_fidelity = 0.9;
  const auto p = spin_mix_populations(m);
  EXPECT_GT(p.n1 / p.n2, std::tanh(0.3));
}

TEST(SpinMixing, DeterministicRoundTrip) {
  for (double gt = 0.01; gt <= 2.0; gt *= 1.3) {
    const auto m = model(gt);
    const auto p = spin_mix_populations(m);
    EXPECT_NEAR(mixing_rate(p.n1, p.n2, m.pulse_duration_ns), m.gamma_mix_per_ns, 0.01 * m.gamma_mix_per_ns) << gt;
  }
}

TEST(SpinMixing, MonteCarloRoundTrip) {
  for (double gt : {0.1, 0.5, 1.0}) {
    const auto m = model(gt);
    const auto r1 = simulate_spin_mixing(m, SpinPrep::opposite, 400000, 40);
    const auto r2 = simulate_spin_mixing(m, SpinPrep::same, 400000, 41);
    const auto exact = spin_mix_populations(m);
    EXPECT_NEAR(r1.n_target, exact.n1, 3 * r1.n_target_stderr);
    EXPECT_NEAR(r2.n_target, exact.n2, 3 * r2.n_target_stderr);
    const double g = mixing_rate(r1.n_target, r2.n_target, m.pulse_duration_ns);
    const double err =
        mixing_rate_stderr(r1.n_target, r2.n_target, r1.n_target_stderr, r2.n_target_stderr, m.pulse_duration_ns);
    EXPECT_NEAR(g, m.gamma_mix_per_ns, 3 * err) << gt;
  }
}

TEST(SpinMixing, TransientsDecayWithConfiguredLifetime) {
  const auto m = model(0.5);
  for (auto prep : {SpinPrep::opposite, SpinPrep::same}) {
    const auto r = simulate_spin_mixing(m, prep, 400000, 42);
    std::vector<double> t, c;
    for (std::size_t i = 0; i < r.transient_counts.size(); ++i) {
      if (r.bin_edges_ns[i] < m.pulse_duration_ns) continue;
      t.push_back(r.bin_edges_ns[i]);
      c.push_back(static_cast<double>(r.transient_counts[i]));
    }
    const auto fit = fit_exponential_decay(t, c, m.pulse_duration_ns);
    ASSERT_TRUE(fit.converged);
    EXPECT_NEAR(fit.value("tau"), m.lifetime_ns, 0.02 * m.lifetime_ns);
  }
}

TEST(SpinMixing, TransientRateIntegratesToPopulationAfterPulse) {
  const auto m = model(0.7);
  double total = 0.0;
  const double dt = 0.05;
  for (double t = m.pulse_duration_ns; t < m.pulse_duration_ns + 30 * m.lifetime_ns; t += dt)
    total += spin_mix_transient_rate(m, SpinPrep::same, t + 0.5 * dt) * dt;
  EXPECT_NEAR(total, spin_mix_population(m, SpinPrep::same), 1e-6);
}

TEST(SpinMixing, DeterministicGivenSeed) {
  const auto m = model(0.5);
  SpinMixOptions a, b;
  a.threads = 1;
  b.threads = 3;
  a.shots_per_chunk = b.shots_per_chunk = 1000;
  const auto x = simulate_spin_mixing(m, SpinPrep::same, 10000, 7, a);
  const auto y = simulate_spin_mixing(m, SpinPrep::same, 10000, 7, b);
  EXPECT_EQ(x.n_target, y.n_target);
  EXPECT_EQ(x.transient_counts, y.transient_counts);
}

TEST(SpinMixing, RejectsBadModel) {
  auto m = model(0.5);
  m.gamma_mix_per_ns = -1;
  EXPECT_THROW(spin_mix_populations(m), std::invalid_argument);
  EXPECT_THROW(simulate_spin_mixing(model(0.5), SpinPrep::same, 0, 1), std::invalid_argument);
}
