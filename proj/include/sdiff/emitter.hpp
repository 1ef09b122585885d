#pragma once

// Emitter and excitation model.  Frequencies and widths are in Hz at this
// boundary; the simulator converts them once into units of sigma_inhom.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdiff {

inline constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2*sqrt(2 ln 2)

struct EmitterModel {
  double f0_hz = 226.128042e12;
  double sigma_inhom_hz = 0.723e9;
  double gamma_hom_hz = 16.9e6;   ///< homogeneous FWHM
  double a_per_pulse = 0.045;     ///< per-pulse diffusion at p_ref_psat
  double p_ref_psat = 1.0;        ///< power at which a_per_pulse applies
  double alpha_dark_per_us = 0.0;
  double beta = 0.0;              ///< background fraction at line centre
  double eta_det = 0.1;
  double lifetime_ns = 691.0;
  double p_max = 1.0;             ///< saturated excitation probability

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("EmitterModel: " + what); };
    if (!(sigma_inhom_hz > 0.0)) fail("sigma_inhom must be > 0");
    if (!(gamma_hom_hz > 0.0)) fail("gamma_hom must be > 0");
    if (!(gamma_hom_hz < kFwhmPerSigma * sigma_inhom_hz))
      fail("gamma_hom must be below the inhomogeneous FWHM");
    if (!(a_per_pulse >= 0.0)) fail("a_per_pulse must be >= 0");
    if (!(p_ref_psat > 0.0)) fail("p_ref must be > 0");
    if (!(alpha_dark_per_us >= 0.0)) fail("alpha_dark must be >= 0");
    if (!(beta >= 0.0 && beta < 1.0)) fail("beta must lie in [0, 1)");
    if (!(eta_det >= 0.0 && eta_det <= 1.0)) fail("eta_det must lie in [0, 1]");
    if (!(lifetime_ns > 0.0)) fail("lifetime must be > 0");
    if (!(p_max > 0.0 && p_max <= 1.0)) fail("p_max must lie in (0, 1]");
  }

  /// A(P) = A_ref * P / P_ref.
  double per_pulse_rate(double power_psat) const noexcept { return a_per_pulse * power_psat / p_ref_psat; }

  /// Homogeneous FWHM in sigma units.
  double gamma_sigma() const noexcept { return gamma_hom_hz / sigma_inhom_hz; }

  /// Saturable Lorentzian: p_max * sL / (1 + sL) with L a unit-peak Lorentzian
  /// of FWHM gamma_hom.  `detuning_sigma` is laser minus emitter.
  double excitation_probability(double detuning_sigma, double power_psat) const noexcept {
    const double x = 2.0 * detuning_sigma / gamma_sigma();
    return p_max * power_psat / (1.0 + power_psat + x * x);
  }

  /// Excitation probability averaged over the stationary N(0, 1) detuning
  /// distribution, for a laser at `laser_sigma`.
  double mean_excitation_probability(double laser_sigma, double power_psat) const {
    const auto integrand = [&](double delta) {
      return std::exp(-0.5 * delta * delta) / std::sqrt(2.0 * std::numbers::pi) *
             excitation_probability(laser_sigma - delta, power_psat);
    };
    const double width = 0.5 * gamma_sigma() * std::sqrt(1.0 + power_psat);
    std::vector<double> cuts{-40.0, 40.0};
    for (double k : {-200.0, -20.0, -3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0, 20.0, 200.0}) {
      const double c = laser_sigma + k * width;
      if (c > -40.0 && c < 40.0) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1], 12,
                                                                              1e-12);
    return total;
  }
};

struct Pulse {
  double frequency_offset_hz = 0.0;  ///< laser frequency relative to f0
  double power_psat = 1.0;
  double duration_ns = 900.0;
  double dark_after_ns = 160.0;
  int channel_label = 0;
};

struct PulseSequence {
  std::vector<Pulse> pulses;
  std::uint64_t repeats = 1;
  /// Detection window relative to each pulse start.  The default window
  /// spans the whole pulse period.
  double window_offset_ns = 0.0;
  std::optional<double> window_length_ns;
  /// Route each detected photon through a 50:50 splitter onto channels 0
  /// and 1 (Hanbury Brown-Twiss) instead of labelling by pulse.
  bool split_detectors = false;

  double period_ns(const Pulse& p) const noexcept { return p.duration_ns + p.dark_after_ns; }

  double window_length(const Pulse& p) const noexcept {
    return window_length_ns ? *window_length_ns : period_ns(p) - window_offset_ns;
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("PulseSequence: " + what); };
    if (pulses.empty()) fail("no pulses");
    if (repeats == 0) fail("repeats must be >= 1");
    if (!(window_offset_ns >= 0.0)) fail("window offset must be >= 0");
    std::vector<bool> seen;
    for (std::size_t i = 0; i < pulses.size(); ++i) {
      const auto& p = pulses[i];
      const std::string at = "pulses[" + std::to_string(i) + "]: ";
      if (!(p.duration_ns >= 0.0)) fail(at + "duration must be >= 0");
      if (!(p.dark_after_ns >= 0.0)) fail(at + "dark time must be >= 0");
      if (!(p.power_psat >= 0.0)) fail(at + "power must be >= 0");
      if (p.channel_label < 0 || p.channel_label > 0xFFFF) fail(at + "channel label out of range");
      if (!(window_length(p) >= 0.0) || window_offset_ns + window_length(p) > period_ns(p) + 1e-9)
        fail(at + "detection window must fit inside the pulse period");
      if (static_cast<int>(seen.size()) <= p.channel_label) seen.resize(p.channel_label + 1, false);
      seen[p.channel_label] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
      fail("channel labels must be dense from 0");
  }
};

}  // namespace sdiff
