#pragma once

// JSON run configuration for the command-line tool.  Every object rejects
// keys it does not know, and every physical quantity names its unit.
// Errors carry the JSON path of the offending field.

#include "json.hpp"  // nlohmann/json, vendored

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdiff/correlator.hpp"
#include "sdiff/emitter.hpp"
#include "sdiff/event_stream.hpp"
#include "sdiff/inference.hpp"
#include "sdiff/pulse_sim.hpp"
#include "sdiff/spin_mixing.hpp"

namespace sdiff::cli {

using json = nlohmann::json;

/// Invalid configuration content (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written (exit code 2).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Typed access to one JSON object that remembers which keys were read.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string at(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) return require(key, fallback);
    const json& v = raw(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    if (!has(key)) return require(key, fallback);
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) fail(at(key), "must be >= 0");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d < 0) fail(at(key), "must be >= 0");
      if (d < 0x1p64 && d == static_cast<double>(static_cast<std::uint64_t>(d))) return static_cast<std::uint64_t>(d);
    }
    fail(at(key), "expected a non-negative integer");
  }

  bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt) {
    if (!has(key)) return require(key, fallback);
    const json& v = raw(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) return require(key, fallback);
    const json& v = raw(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) fail(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  /// Reject keys that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(at(it.key()), "unknown key");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

 private:
  template <class T>
  T require(const std::string& key, const std::optional<T>& fallback) const {
    if (!fallback) fail(at(key), "required key missing");
    return *fallback;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline void check(bool ok, const std::string& where, const std::string& what) {
  if (!ok) Fields::fail(where, what);
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline EmitterModel parse_emitter(const json& j, const std::string& path = "emitter") {
  detail::Fields f(j, path);
  EmitterModel em;
  em.f0_hz = f.number("f0_thz", em.f0_hz * 1e-12) * 1e12;
  em.sigma_inhom_hz = f.number("sigma_inhom_ghz", em.sigma_inhom_hz * 1e-9) * 1e9;
  em.gamma_hom_hz = f.number("gamma_hom_mhz", em.gamma_hom_hz * 1e-6) * 1e6;
  em.a_per_pulse = f.number("a_per_pulse", em.a_per_pulse);
  em.p_ref_psat = f.number("p_ref_psat", em.p_ref_psat);
  em.alpha_dark_per_us = f.number("alpha_dark_per_us", em.alpha_dark_per_us);
  em.beta = f.number("beta", em.beta);
  em.eta_det = f.number("eta_det", em.eta_det);
  em.lifetime_ns = f.number("lifetime_ns", em.lifetime_ns);
  em.p_max = f.number("p_max", em.p_max);
  f.finish();
  using detail::check;
  check(em.sigma_inhom_hz > 0, f.at("sigma_inhom_ghz"), "must be > 0");
  check(em.gamma_hom_hz > 0, f.at("gamma_hom_mhz"), "must be > 0");
  check(em.gamma_hom_hz < kFwhmPerSigma * em.sigma_inhom_hz, f.at("gamma_hom_mhz"),
        "must be below the inhomogeneous FWHM (2.355 sigma_inhom)");
  check(em.a_per_pulse >= 0, f.at("a_per_pulse"), "must be >= 0");
  check(em.p_ref_psat > 0, f.at("p_ref_psat"), "must be > 0");
  check(em.alpha_dark_per_us >= 0, f.at("alpha_dark_per_us"), "must be >= 0");
  check(em.beta >= 0 && em.beta < 1, f.at("beta"), "must lie in [0, 1)");
  check(em.eta_det >= 0 && em.eta_det <= 1, f.at("eta_det"), "must lie in [0, 1]");
  check(em.lifetime_ns > 0, f.at("lifetime_ns"), "must be > 0");
  check(em.p_max > 0 && em.p_max <= 1, f.at("p_max"), "must lie in (0, 1]");
  return em;
}

inline PulseSequence parse_sequence(const json& j, const std::string& path = "sequence") {
  detail::Fields f(j, path);
  using detail::check;
  PulseSequence seq;
  const json& pulses = f.raw("pulses");
  check(pulses.is_array() && !pulses.empty(), f.at("pulses"), "expected a non-empty array");
  int max_label = -1;
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    const std::string at = f.at("pulses") + "[" + std::to_string(i) + "]";
    detail::Fields p(pulses[i], at);
    Pulse pulse;
    pulse.frequency_offset_hz = p.number("frequency_offset_ghz", 0.0) * 1e9;
    pulse.power_psat = p.number("power_psat", pulse.power_psat);
    pulse.duration_ns = p.number("duration_ns", pulse.duration_ns);
    pulse.dark_after_ns = p.number("dark_after_ns", pulse.dark_after_ns);
    pulse.channel_label = static_cast<int>(p.count("channel", static_cast<std::uint64_t>(i)));
    p.finish();
    check(pulse.power_psat >= 0, p.at("power_psat"), "must be >= 0");
    check(pulse.duration_ns >= 0, p.at("duration_ns"), "must be >= 0");
    check(pulse.dark_after_ns >= 0, p.at("dark_after_ns"), "must be >= 0");
    check(pulse.channel_label <= 0xFFFF, p.at("channel"), "must be <= 65535");
    max_label = std::max(max_label, pulse.channel_label);
    seq.pulses.push_back(pulse);
  }
  std::vector<bool> seen(static_cast<std::size_t>(max_label + 1), false);
  for (const auto& p : seq.pulses) seen[static_cast<std::size_t>(p.channel_label)] = true;
  for (std::size_t c = 0; c < seen.size(); ++c)
    check(seen[c], f.at("pulses"), "channel labels must be dense from 0 (missing " + std::to_string(c) + ")");
  seq.repeats = f.count("repeats");
  check(seq.repeats >= 1, f.at("repeats"), "must be >= 1");
  seq.window_offset_ns = f.number("window_offset_ns", 0.0);
  check(seq.window_offset_ns >= 0, f.at("window_offset_ns"), "must be >= 0");
  if (f.has("window_length_ns")) {
    seq.window_length_ns = f.number("window_length_ns");
    check(*seq.window_length_ns >= 0, f.at("window_length_ns"), "must be >= 0");
  }
  seq.split_detectors = f.boolean("split_detectors", false);
  f.finish();
  for (std::size_t i = 0; i < seq.pulses.size(); ++i) {
    const auto& p = seq.pulses[i];
    check(seq.window_offset_ns + seq.window_length(p) <= seq.period_ns(p) + 1e-9 && seq.window_length(p) >= 0,
          f.at("pulses") + "[" + std::to_string(i) + "]",
          "detection window must fit inside duration_ns + dark_after_ns");
  }
  return seq;
}

struct OutputConfig {
  std::optional<std::string> path;
  StreamFormat format = StreamFormat::binary;
};

inline OutputConfig parse_output(const json& j, const std::string& path = "output") {
  detail::Fields f(j, path);
  OutputConfig out;
  if (f.has("path")) out.path = f.text("path");
  const std::string fmt = f.text("format", "binary");
  if (fmt == "binary")
    out.format = StreamFormat::binary;
  else if (fmt == "csv")
    out.format = StreamFormat::csv;
  else
    detail::Fields::fail(f.at("format"), "expected \"binary\" or \"csv\"");
  f.finish();
  return out;
}

enum class CorrelateMode { g2, two_colour };

struct CorrelateConfig {
  CorrelateMode mode = CorrelateMode::two_colour;
  std::uint16_t channel_a = 0;
  std::uint16_t channel_b = 1;
  LagWindow window{};
  long max_lag = 0;
  std::optional<double> beta_correction;  ///< also write the background-corrected curve
};

inline CorrelateConfig parse_correlate(const json& j, const std::string& path = "correlate") {
  detail::Fields f(j, path);
  CorrelateConfig c;
  const std::string mode = f.text("mode", "two_colour");
  if (mode == "g2")
    c.mode = CorrelateMode::g2;
  else if (mode == "two_colour")
    c.mode = CorrelateMode::two_colour;
  else
    detail::Fields::fail(f.at("mode"), "expected \"g2\" or \"two_colour\"");
  const auto a = f.count("channel_a", 0), b = f.count("channel_b", 1);
  detail::check(a <= 0xFFFF, f.at("channel_a"), "must be <= 65535");
  detail::check(b <= 0xFFFF, f.at("channel_b"), "must be <= 65535");
  c.channel_a = static_cast<std::uint16_t>(a);
  c.channel_b = static_cast<std::uint16_t>(b);
  c.window.first = static_cast<long>(f.count("window_first_lag", 200));
  c.window.last = static_cast<long>(f.count("window_last_lag", 400));
  detail::check(c.window.first >= 1 && c.window.first <= c.window.last, f.at("window_first_lag"),
                "need 1 <= window_first_lag <= window_last_lag");
  c.max_lag = static_cast<long>(f.count("max_lag", static_cast<std::uint64_t>(c.window.last)));
  detail::check(c.max_lag >= c.window.last, f.at("max_lag"), "must be >= window_last_lag");
  if (f.has("beta_correction")) {
    c.beta_correction = f.number("beta_correction");
    detail::check(*c.beta_correction >= 0 && *c.beta_correction < 1, f.at("beta_correction"), "must lie in [0, 1)");
  }
  f.finish();
  return c;
}

struct CurveInput {
  std::string path;
  double delta1_sigma = 0.0;
  double delta2_sigma = 0.0;
  std::optional<double> beta;
};

struct BetaRates {
  double r_signal_1_hz = 0.0;
  double r_signal_2_hz = 0.0;
  double r_noise_hz = 0.0;
};

struct LineshapeInput {
  std::string path;  ///< CSV: frequency_ghz,value[,stderr]
  LineShape shape = LineShape::lorentzian;
};

struct MixingInput {
  double n1 = 0.0;
  double n2 = 0.0;
  double pulse_ns = 0.0;
  std::optional<double> n1_stderr;
  std::optional<double> n2_stderr;
};

struct FitConfig {
  std::vector<CurveInput> curves;
  std::optional<double> beta;
  std::optional<BetaRates> beta_rates;
  bool free_beta = false;
  FitAOptions options{};
  std::optional<LineshapeInput> lineshape;
  std::optional<MixingInput> mixing;
};

inline FitConfig parse_fit(const json& j, const std::string& path = "fit") {
  detail::Fields f(j, path);
  using detail::check;
  FitConfig c;
  if (f.has("curves")) {
    const json& arr = f.raw("curves");
    check(arr.is_array(), f.at("curves"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      detail::Fields cf(arr[i], f.at("curves") + "[" + std::to_string(i) + "]");
      c.curves.push_back({cf.text("path"), cf.number("delta1_sigma", 0.0), cf.number("delta2_sigma", 0.0), {}});
      if (cf.has("beta")) {
        c.curves.back().beta = cf.number("beta");
        check(*c.curves.back().beta >= 0 && *c.curves.back().beta < 1, cf.at("beta"), "must lie in [0, 1)");
      }
      cf.finish();
    }
  }
  if (f.has("beta")) {
    c.beta = f.number("beta");
    check(*c.beta >= 0 && *c.beta < 1, f.at("beta"), "must lie in [0, 1)");
  }
  if (f.has("beta_rates")) {
    detail::Fields rf(f.raw("beta_rates"), f.at("beta_rates"));
    BetaRates r{rf.number("r_signal_1_hz"), rf.number("r_signal_2_hz"), rf.number("r_noise_hz")};
    rf.finish();
    check(r.r_signal_1_hz >= 0 && r.r_signal_2_hz >= 0 && r.r_noise_hz >= 0, rf.at("r_noise_hz"),
          "rates must be >= 0");
    check(r.r_signal_1_hz + r.r_signal_2_hz + r.r_noise_hz > 0, f.at("beta_rates"), "rates must not all be zero");
    c.beta_rates = r;
  }
  check(!(c.beta && c.beta_rates), f.at("beta"), "give either beta or beta_rates, not both");
  c.free_beta = f.boolean("free_beta", false);
  c.options.min_lag = static_cast<long>(f.count("min_lag", 1));
  c.options.max_lag = static_cast<long>(f.count("max_lag", 199));
  check(c.options.min_lag >= 1 && c.options.min_lag <= c.options.max_lag, f.at("min_lag"),
        "need 1 <= min_lag <= max_lag");
  if (f.has("lineshape")) {
    detail::Fields lf(f.raw("lineshape"), f.at("lineshape"));
    LineshapeInput in;
    in.path = lf.text("path");
    const std::string shape = lf.text("shape", "lorentzian");
    if (shape == "lorentzian")
      in.shape = LineShape::lorentzian;
    else if (shape == "gaussian")
      in.shape = LineShape::gaussian;
    else
      detail::Fields::fail(lf.at("shape"), "expected \"lorentzian\" or \"gaussian\"");
    lf.finish();
    c.lineshape = in;
  }
  if (f.has("mixing")) {
    detail::Fields mf(f.raw("mixing"), f.at("mixing"));
    MixingInput m;
    m.n1 = mf.number("n1");
    m.n2 = mf.number("n2");
    m.pulse_ns = mf.number("pulse_ns");
    if (mf.has("n1_stderr")) m.n1_stderr = mf.number("n1_stderr");
    if (mf.has("n2_stderr")) m.n2_stderr = mf.number("n2_stderr");
    mf.finish();
    check(m.n1 >= 0, mf.at("n1"), "must be >= 0");
    check(m.n2 > m.n1, mf.at("n2"), "must exceed n1");
    check(m.pulse_ns > 0, mf.at("pulse_ns"), "must be > 0");
    c.mixing = m;
  }
  f.finish();
  check(!c.curves.empty() || c.lineshape || c.mixing || c.beta_rates, path,
        "nothing to fit: give curves, lineshape, mixing or beta_rates");
  const bool every_curve_has_beta =
      std::all_of(c.curves.begin(), c.curves.end(), [](const CurveInput& in) { return in.beta.has_value(); });
  check(c.curves.empty() || c.beta || c.beta_rates || c.free_beta || every_curve_has_beta, f.at("beta"),
        "correlation fits need beta, beta_rates, free_beta or a beta on every curve");
  return c;
}

struct RcConfig {
  RcSettings settings{};
  std::vector<double> probe_offsets_hz;
  bool fit_lorentzian = true;
};

inline RcConfig parse_rc(const json& j, const std::string& path = "rc") {
  detail::Fields f(j, path);
  using detail::check;
  RcConfig c;
  auto& s = c.settings;
  s.check_offset_hz = f.number("check_offset_ghz", 0.0) * 1e9;
  s.check_power_psat = f.number("check_power_psat", s.check_power_psat);
  s.probe_power_psat = f.number("probe_power_psat", s.probe_power_psat);
  s.tau_dark_ns = f.number("tau_dark_ns", 0.0);
  s.shots = f.count("shots");
  s.max_check_pulses = f.count("max_check_pulses", s.max_check_pulses);
  check(s.check_power_psat > 0, f.at("check_power_psat"), "must be > 0");
  check(s.probe_power_psat > 0, f.at("probe_power_psat"), "must be > 0");
  check(s.tau_dark_ns >= 0, f.at("tau_dark_ns"), "must be >= 0");
  check(s.shots >= 1, f.at("shots"), "must be >= 1");
  check(s.max_check_pulses >= 1, f.at("max_check_pulses"), "must be >= 1");
  if (f.has("probe_offsets_ghz")) {
    for (double g : f.numbers("probe_offsets_ghz")) c.probe_offsets_hz.push_back(g * 1e9);
    check(!c.probe_offsets_hz.empty(), f.at("probe_offsets_ghz"), "must not be empty");
  } else {
    const double span = f.number("probe_span_ghz", 0.4);
    const auto points = f.count("probe_points", 21);
    check(span >= 0, f.at("probe_span_ghz"), "must be >= 0");
    check(points >= 1, f.at("probe_points"), "must be >= 1");
    for (std::uint64_t i = 0; i < points; ++i) {
      const double x = points == 1 ? 0.0 : -0.5 * span + span * static_cast<double>(i) / (points - 1);
      c.probe_offsets_hz.push_back(s.check_offset_hz + x * 1e9);
    }
  }
  c.fit_lorentzian = f.boolean("fit_lorentzian", true);
  f.finish();
  return c;
}

struct SpeedupConfig {
  std::vector<int> n_values;
  std::vector<double> eta_det_values;
  double eta_sd = 0.0;
  double eta_sd_rc = 0.0;
  double tau_attempt_ns = 1000.0;
};

inline SpeedupConfig parse_speedup(const json& j, const std::string& path = "speedup") {
  detail::Fields f(j, path);
  using detail::check;
  SpeedupConfig c;
  const auto n_min = f.count("n_min", 1), n_max = f.count("n_max", 12);
  check(n_min >= 1 && n_min <= n_max && n_max <= 4096, f.at("n_min"), "need 1 <= n_min <= n_max <= 4096");
  for (auto n = n_min; n <= n_max; ++n) c.n_values.push_back(static_cast<int>(n));
  if (f.has("eta_det_values")) {
    c.eta_det_values = f.numbers("eta_det_values");
    check(!c.eta_det_values.empty(), f.at("eta_det_values"), "must not be empty");
  } else {
    const double lo = f.number("eta_det_min", 0.01), hi = f.number("eta_det_max", 1.0);
    const auto points = f.count("eta_det_points", 25);
    check(lo > 0 && lo <= hi && hi <= 1, f.at("eta_det_min"), "need 0 < eta_det_min <= eta_det_max <= 1");
    check(points >= 1, f.at("eta_det_points"), "must be >= 1");
    for (std::uint64_t i = 0; i < points; ++i)
      c.eta_det_values.push_back(points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  }
  for (std::size_t i = 0; i < c.eta_det_values.size(); ++i)
    check(c.eta_det_values[i] > 0 && c.eta_det_values[i] <= 1, f.at("eta_det_values") + "[" + std::to_string(i) + "]",
          "must lie in (0, 1]");
  c.eta_sd = f.number("eta_sd");
  c.eta_sd_rc = f.number("eta_sd_rc");
  c.tau_attempt_ns = f.number("tau_attempt_ns", c.tau_attempt_ns);
  check(c.eta_sd > 0 && c.eta_sd <= 1, f.at("eta_sd"), "must lie in (0, 1]");
  check(c.eta_sd_rc >= c.eta_sd && c.eta_sd_rc <= 1, f.at("eta_sd_rc"), "must lie in [eta_sd, 1]");
  check(c.tau_attempt_ns > 0, f.at("tau_attempt_ns"), "must be > 0");
  f.finish();
  return c;
}

struct MixConfig {
  SpinMixModel model{};
  std::uint64_t shots = 100000;
  double bin_width_ns = 10.0;
};

inline MixConfig parse_mix(const json& j, const std::string& path = "mix") {
  detail::Fields f(j, path);
  using detail::check;
  MixConfig c;
  c.model.gamma_mix_per_ns = f.number("gamma_mix_per_ns");
  c.model.lifetime_ns = f.number("lifetime_ns", c.model.lifetime_ns);
  c.model.pulse_duration_ns = f.number("pulse_duration_ns", c.model.pulse_duration_ns);
  c.model.init_fidelity = f.number("init_fidelity", 1.0);
  c.shots = f.count("shots", c.shots);
  c.bin_width_ns = f.number("bin_width_ns", c.bin_width_ns);
  f.finish();
  check(c.model.gamma_mix_per_ns >= 0, f.at("gamma_mix_per_ns"), "must be >= 0");
  check(c.model.lifetime_ns > 0, f.at("lifetime_ns"), "must be > 0");
  check(c.model.pulse_duration_ns > 0, f.at("pulse_duration_ns"), "must be > 0");
  check(c.model.init_fidelity >= 0 && c.model.init_fidelity <= 1, f.at("init_fidelity"), "must lie in [0, 1]");
  check(c.shots >= 1, f.at("shots"), "must be >= 1");
  check(c.bin_width_ns > 0, f.at("bin_width_ns"), "must be > 0");
  return c;
}

/// Parsed top-level document.  Sections are optional here; each subcommand
/// checks for the ones it needs.
struct RunConfig {
  json document;
  std::optional<EmitterModel> emitter;
  std::optional<PulseSequence> sequence;
  OutputConfig output{};
  std::optional<CorrelateConfig> correlate;
  std::optional<FitConfig> fit;
  std::optional<RcConfig> rc;
  std::optional<SpeedupConfig> speedup;
  std::optional<MixConfig> mix;
};

inline RunConfig parse_run_config(const json& j) {
  detail::Fields f(j, "");
  RunConfig c;
  c.document = j;
  if (f.has("emitter")) c.emitter = parse_emitter(f.raw("emitter"));
  if (f.has("sequence")) c.sequence = parse_sequence(f.raw("sequence"));
  if (f.has("output")) c.output = parse_output(f.raw("output"));
  if (f.has("correlate")) c.correlate = parse_correlate(f.raw("correlate"));
  if (f.has("fit")) c.fit = parse_fit(f.raw("fit"));
  if (f.has("rc")) c.rc = parse_rc(f.raw("rc"));
  if (f.has("speedup")) c.speedup = parse_speedup(f.raw("speedup"));
  if (f.has("mix")) c.mix = parse_mix(f.raw("mix"));
  if (f.has("comment")) f.text("comment");
  f.finish();
  return c;
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError(source + ": empty configuration");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON (" + std::string(e.what()) + ")");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(parse_json_text(read_file(path), path));
}

// ---------------------------------------------------------------------------
// Provenance

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

/// Hash of the canonical serialization (sorted keys, no whitespace).
inline std::string config_hash(const json& j) { return "fnv1a64:" + hex64(fnv1a64(j.dump())); }

}  // namespace sdiff::cli
