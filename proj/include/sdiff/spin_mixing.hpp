#pragma once

// Laser-driven mixing between the two excited spin states.  During a pulse of
// duration T the states exchange population symmetrically at rate gamma;
// both decay with the same lifetime, and mixing stops when the pulse ends.
// The monitored state's population at the end of the pulse is n2 when that
// state was prepared and n1 when the other one was, so that
// n1 / n2 = tanh(gamma T) for perfect initialization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sdiff/parallel.hpp"
#include "sdiff/rng.hpp"

namespace sdiff {

struct SpinMixModel {
  double gamma_mix_per_ns = 0.0;
  double lifetime_ns = 602.0;
  double pulse_duration_ns = 100.0;
  double init_fidelity = 1.0;

  void validate() const {
    if (!(gamma_mix_per_ns >= 0.0)) throw std::invalid_argument("SpinMixModel: gamma must be >= 0");
    if (!(lifetime_ns > 0.0)) throw std::invalid_argument("SpinMixModel: lifetime must be > 0");
    if (!(pulse_duration_ns > 0.0)) throw std::invalid_argument("SpinMixModel: pulse duration must be > 0");
    if (!(init_fidelity >= 0.0 && init_fidelity <= 1.0))
      throw std::invalid_argument("SpinMixModel: init_fidelity outside [0, 1]");
  }
};

/// Which state was prepared relative to the monitored one: opposite gives
/// n1, same gives n2.
enum class SpinPrep { opposite = 1, same = 2 };

namespace detail {
// Probability of being in the monitored state at time t <= T, given the
// starting state, ignoring decay.
inline double stay_probability(double gamma, double t) { return 0.5 * (1.0 + std::exp(-2.0 * gamma * t)); }
}  // namespace detail

/// Deterministic solution of the rate equations: monitored-state population
/// at the end of the pulse.
inline double spin_mix_population(const SpinMixModel& m, SpinPrep prep) {
  m.validate();
  const double stay = detail::stay_probability(m.gamma_mix_per_ns, m.pulse_duration_ns);
  const double start_same = prep == SpinPrep::same ? m.init_fidelity : 1.0 - m.init_fidelity;
  const double monitored = start_same * stay + (1.0 - start_same) * (1.0 - stay);
  return std::exp(-m.pulse_duration_ns / m.lifetime_ns) * monitored;
}

struct SpinPopulations {
  double n1 = 0.0;
  double n2 = 0.0;
};

inline SpinPopulations spin_mix_populations(const SpinMixModel& m) {
  return {spin_mix_population(m, SpinPrep::opposite), spin_mix_population(m, SpinPrep::same)};
}

/// Expected monitored-state photon emission rate (per shot per ns) at time t
/// after the start of the pulse.
inline double spin_mix_transient_rate(const SpinMixModel& m, SpinPrep prep, double t_ns) {
  m.validate();
  if (t_ns < 0.0) return 0.0;
  const double start_same = prep == SpinPrep::same ? m.init_fidelity : 1.0 - m.init_fidelity;
  const double t_mix = std::min(t_ns, m.pulse_duration_ns);
  const double stay = detail::stay_probability(m.gamma_mix_per_ns, t_mix);
  const double monitored = start_same * stay + (1.0 - start_same) * (1.0 - stay);
  return monitored * std::exp(-t_ns / m.lifetime_ns) / m.lifetime_ns;
}

struct SpinMixResult {
  std::uint64_t shots = 0;
  double n_target = 0.0;  ///< monitored-state population at the end of the pulse
  double n_target_stderr = 0.0;
  std::vector<double> bin_edges_ns;  ///< transient histogram edges
  std::vector<std::uint64_t> transient_counts;
};

struct SpinMixOptions {
  double bin_width_ns = 10.0;
  double horizon_lifetimes = 6.0;  ///< histogram extends to T + horizon * lifetime
  unsigned threads = default_threads();
  std::uint64_t shots_per_chunk = 1u << 16;
};

inline SpinMixResult simulate_spin_mixing(const SpinMixModel& m, SpinPrep prep, std::uint64_t shots,
                                          std::uint64_t seed, const SpinMixOptions& opt = {}) {
  m.validate();
  if (shots < 1) throw std::invalid_argument("simulate_spin_mixing: shots must be >= 1");
  if (!(opt.bin_width_ns > 0.0)) throw std::invalid_argument("simulate_spin_mixing: bin width must be > 0");

  SpinMixResult result;
  result.shots = shots;
  const double horizon = m.pulse_duration_ns + opt.horizon_lifetimes * m.lifetime_ns;
  const auto n_bins = static_cast<std::size_t>(std::ceil(horizon / opt.bin_width_ns));
  for (std::size_t i = 0; i <= n_bins; ++i) result.bin_edges_ns.push_back(static_cast<double>(i) * opt.bin_width_ns);
  result.transient_counts.assign(n_bins, 0);

  struct Partial {
    std::uint64_t in_target = 0;
    std::vector<std::uint64_t> counts;
  };
  const std::uint64_t n_chunks = (shots + opt.shots_per_chunk - 1) / opt.shots_per_chunk;
  std::uint64_t in_target = 0;
  auto produce = [&](std::size_t chunk) {
    Philox rng(seed, chunk);
    Partial part;
    part.counts.assign(n_bins, 0);
    const std::uint64_t count = std::min(opt.shots_per_chunk, shots - chunk * opt.shots_per_chunk);
    for (std::uint64_t s = 0; s < count; ++s) {
      const bool intended = uniform01(rng) < m.init_fidelity;
      const bool start_monitored = (prep == SpinPrep::same) == intended;
      const double t_decay = exponential(rng, m.lifetime_ns);
      const double t_mix = std::min(t_decay, m.pulse_duration_ns);
      const bool flipped = m.gamma_mix_per_ns > 0.0 && (poisson(rng, m.gamma_mix_per_ns * t_mix) & 1u);
      const bool monitored = start_monitored != flipped;
      if (monitored && t_decay >= m.pulse_duration_ns) ++part.in_target;
      if (monitored && t_decay < horizon) {
        const auto bin = std::min(n_bins - 1, static_cast<std::size_t>(t_decay / opt.bin_width_ns));
        ++part.counts[bin];
      }
    }
    return part;
  };
  ordered_chunks(n_chunks, opt.threads, produce, [&](Partial&& p) {
    in_target += p.in_target;
    for (std::size_t i = 0; i < n_bins; ++i) result.transient_counts[i] += p.counts[i];
  });
  const double n = static_cast<double>(shots);
  result.n_target = static_cast<double>(in_target) / n;
  result.n_target_stderr = std::sqrt(std::max(result.n_target * (1.0 - result.n_target), 1.0 / n) / n);
  return result;
}

}  // namespace sdiff
