#pragma once

// Monte Carlo driver: pushes an emitter with O-U spectral diffusion through
// pulse sequences and produces photon records.
//
// Per pulse: the detuning takes one exact O-U step of alpha*t = A(P); at most
// one signal photon is emitted with probability p_exc * eta_det, delayed by
// an exponential lifetime draw and kept if it lands in the detection window;
// background counts are Poisson in the window; the dark interval that follows
// advances the detuning with alpha_dark only.
//
// Work is split into fixed-size chunks of repeats (shots for the resonance
// check).  Chunk k draws from Philox(seed, k) and starts the emitter from the
// stationary distribution, so output does not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sdiff/emitter.hpp"
#include "sdiff/event_stream.hpp"
#include "sdiff/ou.hpp"
#include "sdiff/parallel.hpp"
#include "sdiff/rng.hpp"

namespace sdiff {

struct SimOptions {
  unsigned threads = default_threads();
  std::uint64_t chunk_pulses = 1u << 17;  ///< target pulses per independent chunk
};

/// Mean background counts per detection window implied by beta at line
/// centre for pulses of the given power, with `signal_scale` the fraction of
/// excitations that end up detected.
inline double background_per_window(const EmitterModel& emitter, double power_psat, double signal_scale) {
  if (emitter.beta == 0.0) return 0.0;
  const double s0 = emitter.mean_excitation_probability(0.0, power_psat) * signal_scale;
  return emitter.beta / (1.0 - emitter.beta) * s0;
}

namespace detail {

struct PreparedPulse {
  double laser_sigma;
  double power;
  OUKernel pulse_kernel;
  OUKernel dark_kernel;
  bool diffuses;
  bool dark_diffuses;
  double start_ns;  // within one repeat
  double window_offset_ns;
  double window_length_ns;
  double background_mean;
  std::uint16_t channel;
};

inline double window_fraction(double offset, double length, double lifetime) {
  return std::exp(-offset / lifetime) - std::exp(-(offset + length) / lifetime);
}

inline std::vector<PreparedPulse> prepare(const EmitterModel& em, const PulseSequence& seq, double& repeat_ns) {
  std::vector<PreparedPulse> out;
  double t = 0.0;
  for (const auto& p : seq.pulses) {
    const double a = em.per_pulse_rate(p.power_psat);
    const double dark = em.alpha_dark_per_us * p.dark_after_ns * 1e-3;
    const double win_len = seq.window_length(p);
    const double frac = window_fraction(seq.window_offset_ns, win_len, em.lifetime_ns);
    out.push_back(PreparedPulse{p.frequency_offset_hz / em.sigma_inhom_hz, p.power_psat, OUKernel(a),
                                OUKernel(dark), a > 0.0, dark > 0.0, t, seq.window_offset_ns, win_len,
                                background_per_window(em, p.power_psat, em.eta_det * frac),
                                static_cast<std::uint16_t>(p.channel_label)});
    t += seq.period_ns(p);
  }
  repeat_ns = t;
  return out;
}

}  // namespace detail

/// Streaming form: `sink` receives consecutive blocks of time-ordered records.
template <class Sink>
  requires std::invocable<Sink&, std::vector<PhotonRecord>&&>
void run_sequence(const EmitterModel& emitter, const PulseSequence& seq, std::uint64_t seed, Sink&& sink,
                  const SimOptions& options = {}) {
  emitter.validate();
  seq.validate();
  const std::uint64_t total_pulses = seq.repeats * seq.pulses.size();
  if (total_pulses / seq.pulses.size() != seq.repeats || total_pulses > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("run_sequence: pulse count exceeds 32-bit pulse index");

  double repeat_ns = 0.0;
  const auto pulses = detail::prepare(emitter, seq, repeat_ns);
  const std::uint64_t chunk_repeats = std::max<std::uint64_t>(1, options.chunk_pulses / pulses.size());
  const std::uint64_t n_chunks = (seq.repeats + chunk_repeats - 1) / chunk_repeats;
  const double eta = emitter.eta_det;
  const double lifetime = emitter.lifetime_ns;

  auto produce = [&](std::size_t chunk) {
    Philox rng(seed, chunk);
    NormalSampler normal;
    std::vector<PhotonRecord> records;
    double delta = normal(rng);
    const std::uint64_t first = chunk * chunk_repeats;
    const std::uint64_t last = std::min(seq.repeats, first + chunk_repeats);
    std::vector<PhotonRecord> pulse_records;
    for (std::uint64_t rep = first; rep < last; ++rep) {
      for (std::size_t k = 0; k < pulses.size(); ++k) {
        const auto& p = pulses[k];
        const auto pulse_index = static_cast<std::uint32_t>(rep * pulses.size() + k);
        const double start = static_cast<double>(rep) * repeat_ns + p.start_ns;
        if (p.diffuses) delta = p.pulse_kernel(delta, normal(rng));
        pulse_records.clear();
        const double p_detect = emitter.excitation_probability(p.laser_sigma - delta, p.power) * eta;
        if (uniform01(rng) < p_detect) {
          const double delay = exponential(rng, lifetime);
          if (delay >= p.window_offset_ns && delay < p.window_offset_ns + p.window_length_ns)
            pulse_records.push_back({static_cast<std::uint64_t>(std::llround(start + delay)), pulse_index,
                                     p.channel, Origin::signal});
        }
        for (std::uint32_t n = poisson(rng, p.background_mean); n > 0; --n) {
          const double when = start + p.window_offset_ns + uniform01(rng) * p.window_length_ns;
          pulse_records.push_back(
              {static_cast<std::uint64_t>(std::llround(when)), pulse_index, p.channel, Origin::background});
        }
        if (pulse_records.size() > 1)
          std::sort(pulse_records.begin(), pulse_records.end(),
                    [](const PhotonRecord& a, const PhotonRecord& b) { return a.time_ns < b.time_ns; });
        for (auto& r : pulse_records) {
          if (seq.split_detectors) r.channel = static_cast<std::uint16_t>(rng() & 1u);
          records.push_back(r);
        }
        if (p.dark_diffuses) delta = p.dark_kernel(delta, normal(rng));
      }
    }
    return records;
  };
  ordered_chunks(n_chunks, options.threads, produce, sink);
}

inline EventStream run_sequence(const EmitterModel& emitter, const PulseSequence& seq, std::uint64_t seed,
                                const SimOptions& options = {}) {
  EventStream stream;
  run_sequence(
      emitter, seq, seed,
      [&](std::vector<PhotonRecord>&& block) {
        stream.records.insert(stream.records.end(), block.begin(), block.end());
      },
      options);
  stream.n_pulses = seq.repeats * seq.pulses.size();
  return stream;
}

/// Detuning trajectory (sigma units, one value per pulse after its diffusion
/// step) for a single chunk; used to inspect the environment directly.
inline std::vector<double> detuning_trajectory(const EmitterModel& emitter, const PulseSequence& seq,
                                               std::uint64_t seed) {
  emitter.validate();
  seq.validate();
  double repeat_ns = 0.0;
  const auto pulses = detail::prepare(emitter, seq, repeat_ns);
  Philox rng(seed, 0);
  NormalSampler normal;
  double delta = normal(rng);
  std::vector<double> out;
  out.reserve(seq.repeats * pulses.size());
  for (std::uint64_t rep = 0; rep < seq.repeats; ++rep)
    for (const auto& p : pulses) {
      if (p.diffuses) delta = p.pulse_kernel(delta, normal(rng));
      out.push_back(delta);
      if (p.dark_diffuses) delta = p.dark_kernel(delta, normal(rng));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Resonance check: fire check pulses until one photon is detected, wait in
// the dark, then fire a single probe pulse.

struct RcSettings {
  double check_offset_hz = 0.0;
  double probe_offset_hz = 0.0;
  double check_power_psat = 0.016;
  double probe_power_psat = 0.008;
  double tau_dark_ns = 0.0;
  std::uint64_t shots = 1000;
  std::uint64_t max_check_pulses = 100000;
  std::uint64_t shots_per_chunk = 256;

  void validate() const {
    if (!(check_power_psat > 0.0) || !(probe_power_psat > 0.0))
      throw std::invalid_argument("RcSettings: powers must be > 0");
    if (shots < 1) throw std::invalid_argument("RcSettings: shots must be >= 1");
    if (!(tau_dark_ns >= 0.0)) throw std::invalid_argument("RcSettings: tau_dark must be >= 0");
    if (max_check_pulses < 1 || shots_per_chunk < 1)
      throw std::invalid_argument("RcSettings: cap and chunk size must be >= 1");
  }
};

struct RcShot {
  std::uint64_t check_pulses = 0;
  bool probe_detected = false;
  bool censored = false;  ///< check cap exhausted; no probe fired

  friend bool operator==(const RcShot&, const RcShot&) = default;
};

struct RcOutcome {
  std::vector<RcShot> shots;

  std::size_t censored() const noexcept {
    return static_cast<std::size_t>(std::count_if(shots.begin(), shots.end(), [](auto& s) { return s.censored; }));
  }
  std::size_t probes() const noexcept { return shots.size() - censored(); }
  std::size_t detections() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(shots.begin(), shots.end(), [](auto& s) { return s.probe_detected; }));
  }
  /// Probe detection probability over uncensored shots.
  double probe_probability() const noexcept {
    return probes() ? static_cast<double>(detections()) / static_cast<double>(probes()) : 0.0;
  }
  double probe_probability_stderr() const noexcept {
    const double n = static_cast<double>(probes());
    if (n == 0.0) return 0.0;
    const double p = probe_probability();
    return std::sqrt(std::max(p * (1.0 - p), 1.0 / n) / n);
  }
  double mean_check_pulses() const noexcept {
    double sum = 0.0;
    for (const auto& s : shots) sum += static_cast<double>(s.check_pulses);
    return shots.empty() ? 0.0 : sum / static_cast<double>(shots.size());
  }
};

inline RcOutcome run_rc_sequence(const EmitterModel& emitter, const RcSettings& rc, std::uint64_t seed,
                                 const SimOptions& options = {}) {
  emitter.validate();
  rc.validate();
  const double check_laser = rc.check_offset_hz / emitter.sigma_inhom_hz;
  const double probe_laser = rc.probe_offset_hz / emitter.sigma_inhom_hz;
  const OUKernel check_kernel(emitter.per_pulse_rate(rc.check_power_psat));
  const OUKernel probe_kernel(emitter.per_pulse_rate(rc.probe_power_psat));
  const double dark_alpha_t = emitter.alpha_dark_per_us * rc.tau_dark_ns * 1e-3;
  const OUKernel dark_kernel(dark_alpha_t);
  const double no_bg_check = std::exp(-background_per_window(emitter, rc.check_power_psat, emitter.eta_det));
  const double no_bg_probe = std::exp(-background_per_window(emitter, rc.probe_power_psat, emitter.eta_det));
  const double eta = emitter.eta_det;

  const std::uint64_t n_chunks = (rc.shots + rc.shots_per_chunk - 1) / rc.shots_per_chunk;
  RcOutcome outcome;
  outcome.shots.reserve(rc.shots);

  auto produce = [&](std::size_t chunk) {
    Philox rng(seed, chunk);
    NormalSampler normal;
    double delta = normal(rng);
    const std::uint64_t count = std::min(rc.shots_per_chunk, rc.shots - chunk * rc.shots_per_chunk);
    std::vector<RcShot> shots(count);
    for (auto& shot : shots) {
      bool heralded = false;
      while (shot.check_pulses < rc.max_check_pulses) {
        ++shot.check_pulses;
        delta = check_kernel(delta, normal(rng));
        const double p_sig = emitter.excitation_probability(check_laser - delta, rc.check_power_psat) * eta;
        if (uniform01(rng) < 1.0 - (1.0 - p_sig) * no_bg_check) {
          heralded = true;
          break;
        }
      }
      if (!heralded) {
        shot.censored = true;
        continue;
      }
      if (dark_alpha_t > 0.0) delta = dark_kernel(delta, normal(rng));
      delta = probe_kernel(delta, normal(rng));
      const double p_sig = emitter.excitation_probability(probe_laser - delta, rc.probe_power_psat) * eta;
      shot.probe_detected = uniform01(rng) < 1.0 - (1.0 - p_sig) * no_bg_probe;
    }
    return shots;
  };
  ordered_chunks(n_chunks, options.threads, produce, [&](std::vector<RcShot>&& block) {
    outcome.shots.insert(outcome.shots.end(), block.begin(), block.end());
  });
  return outcome;
}

}  // namespace sdiff
