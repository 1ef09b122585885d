// sdiff: simulate spectral diffusion, correlate photon streams, fit model
// parameters and evaluate resonance-check statistics.
//
// Exit codes: 0 ok, 1 configuration or validation error, 2 I/O error,
// 3 fit did not converge (only with --strict).

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sdiff/cli/provenance.hpp"
#include "sdiff/cli/run_config.hpp"
#include "sdiff/sdiff.hpp"

#ifndef SDIFF_VERSION
#define SDIFF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace sdiff;
using namespace sdiff::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitNoConvergence = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = default_threads();
  std::string out;
  bool strict = false;
};

std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void close_output(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("error writing '" + path + "'");
}

// Output name with `suffix` in place of a trailing ".csv" (or appended).
std::string derived_path(const std::string& base, const std::string& suffix) {
  const std::string stem = base.size() > 4 && base.ends_with(".csv") ? base.substr(0, base.size() - 4) : base;
  return stem + suffix;
}

std::string sidecar_path(const std::string& out) { return derived_path(out, "") + ".provenance.json"; }

RunConfig load_optional(const std::string& path) {
  if (path.empty()) return parse_run_config(json::object());
  return load_run_config(path);
}

template <class T>
const T& need(const std::optional<T>& section, const char* name) {
  if (!section) throw ConfigError(std::string(name) + ": required section missing");
  return *section;
}

std::uint64_t need_seed(const Common& c) {
  if (!c.seed) throw ConfigError("--seed: required for stochastic commands");
  return *c.seed;
}

Provenance provenance(const Common& c, const char* command, const json& config) {
  Provenance p;
  p.tool_version = SDIFF_VERSION;
  p.command = command;
  p.config = config;
  p.seed = c.seed;
  p.threads = c.threads;
  return p;
}

std::string resolve(const std::string& path, const std::string& config_path) {
  if (path.empty() || fs::path(path).is_absolute() || config_path.empty()) return path;
  return (fs::path(config_path).parent_path() / path).string();
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c, const std::string& format_flag) {
  auto cfg = load_optional(c.config_path);
  const auto& em = need(cfg.emitter, "emitter");
  const auto& seq = need(cfg.sequence, "sequence");
  const std::uint64_t seed = need_seed(c);
  std::string out_path = c.out.empty() ? cfg.output.path.value_or("") : c.out;
  if (out_path.empty()) throw ConfigError("output.path: required (or pass --out)");
  StreamFormat format = cfg.output.format;
  if (!format_flag.empty()) format = format_flag == "csv" ? StreamFormat::csv : StreamFormat::binary;

  json effective = cfg.document;
  effective["output"]["path"] = out_path;
  effective["output"]["format"] = format == StreamFormat::csv ? "csv" : "binary";

  auto out = open_output(out_path, std::ios::out | std::ios::binary);
  EventWriter writer(out, format);
  std::uint64_t records = 0;
  run_sequence(
      em, seq, seed,
      [&](std::vector<PhotonRecord>&& block) {
        writer.write(block);
        records += block.size();
        if (!out) throw IoError("error writing '" + out_path + "'");
      },
      SimOptions{c.threads});
  close_output(out, out_path);

  auto p = provenance(c, "simulate", effective);
  p.outputs = {out_path};
  write_provenance(sidecar_path(out_path), p);
  std::cerr << "sdiff simulate: " << records << " records from " << seq.repeats * seq.pulses.size()
            << " pulses -> " << out_path << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CorrelateFlags {
  std::string input;
  std::string mode;
  std::vector<unsigned> channels;
  std::vector<long> window;
  long max_lag = 0;
  std::optional<double> beta_correction;
};

int cmd_correlate(const Common& c, const CorrelateFlags& f) {
  auto cfg = load_optional(c.config_path);
  json section = cfg.document.value("correlate", json::object());
  if (!f.mode.empty()) section["mode"] = f.mode;
  if (f.channels.size() == 2) {
    section["channel_a"] = f.channels[0];
    section["channel_b"] = f.channels[1];
  }
  if (f.window.size() == 2) {
    section["window_first_lag"] = f.window[0];
    section["window_last_lag"] = f.window[1];
  }
  if (f.max_lag > 0) section["max_lag"] = f.max_lag;
  if (f.beta_correction) section["beta_correction"] = *f.beta_correction;
  const auto opt = parse_correlate(section);
  if (c.out.empty()) throw ConfigError("--out: required");

  std::ifstream in(f.input, std::ios::binary);
  if (!in) throw IoError("cannot open '" + f.input + "' for reading");
  EventReader reader(in);
  const long max_lag = std::max(opt.max_lag, opt.window.last);
  CoincidenceCounter counter = opt.mode == CorrelateMode::g2 ? CoincidenceCounter(max_lag)
                                                             : CoincidenceCounter(max_lag, opt.channel_a, opt.channel_b);
  while (auto r = reader.next()) counter.add(*r);
  if (in.bad()) throw IoError("error reading '" + f.input + "'");
  if (counter.events() < 2) throw ConfigError(f.input + ": need at least two events to correlate");
  const auto curve = counter.finish(opt.window);

  auto out = open_output(c.out);
  write_curve_csv(out, curve);
  close_output(out, c.out);
  std::vector<std::string> outputs{c.out};
  if (opt.beta_correction) {
    const std::string corrected_path = derived_path(c.out, "_corrected.csv");
    auto corr = open_output(corrected_path);
    write_curve_csv(corr, background_corrected(curve, *opt.beta_correction));
    close_output(corr, corrected_path);
    outputs.push_back(corrected_path);
  }

  json effective = cfg.document;
  effective["correlate"] = section;
  auto p = provenance(c, "correlate", effective);
  p.inputs = {f.input};
  p.outputs = outputs;
  write_provenance(sidecar_path(c.out), p);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct LineshapeData {
  std::vector<double> freqs_hz, values, sigmas;
};

LineshapeData read_lineshape_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty lineshape file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool with_sigma = line == "frequency_ghz,value,stderr";
  if (!with_sigma && line != "frequency_ghz,value")
    throw ConfigError(path + ": header must be 'frequency_ghz,value' or 'frequency_ghz,value,stderr'");
  LineshapeData d;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, e;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    if (with_sigma) std::getline(row, e);
    try {
      d.freqs_hz.push_back(std::stod(a) * 1e9);
      d.values.push_back(std::stod(b));
      if (with_sigma) d.sigmas.push_back(std::stod(e));
    } catch (const std::exception&) {
      throw ConfigError(path + ": malformed row '" + line + "'");
    }
  }
  return d;
}

FitResult renamed(FitResult fit, const std::string& prefix, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < fit.names.size() && i < names.size(); ++i) fit.names[i] = prefix + names[i];
  return fit;
}

int cmd_fit(const Common& c) {
  if (c.config_path.empty()) throw ConfigError("--config: required for fit");
  auto cfg = load_run_config(c.config_path);
  const auto& fc = need(cfg.fit, "fit");
  if (c.out.empty()) throw ConfigError("--out: required");

  std::vector<FitResult> results;
  std::vector<std::string> inputs;
  std::optional<double> beta = fc.beta;
  if (fc.beta_rates) {
    const auto& r = *fc.beta_rates;
    beta = compute_beta(r.r_signal_1_hz, r.r_signal_2_hz, r.r_noise_hz);
    FitResult b;
    b.names = {"beta"};
    b.values = {*beta};
    b.errors = {0.0};
    b.residual_norm = 0.0;
    b.converged = true;
    b.message = "computed from rates";
    results.push_back(b);
  }
  if (!fc.curves.empty()) {
    std::vector<CurveData> curves;
    for (const auto& in : fc.curves) {
      const std::string path = resolve(in.path, c.config_path);
      std::istringstream text(read_file(path));
      try {
        curves.push_back({read_curve_csv(text), in.delta1_sigma, in.delta2_sigma, in.beta});
      } catch (const FormatError& e) {
        throw ConfigError(path + ": " + e.what());
      }
      inputs.push_back(path);
    }
    if (fc.free_beta)
      results.push_back(fit_A_beta(curves, 0.05, beta.value_or(0.05), fc.options));
    else
      results.push_back(fit_A(curves, beta.value_or(0.0), fc.options));
  }
  if (fc.lineshape) {
    const std::string path = resolve(fc.lineshape->path, c.config_path);
    const auto d = read_lineshape_csv(path);
    inputs.push_back(path);
    results.push_back(renamed(fit_lineshape(d.freqs_hz, d.values, fc.lineshape->shape, d.sigmas), "",
                              {"centre_hz", "fwhm_hz", "amplitude", "offset"}));
  }
  if (fc.mixing) {
    const auto& m = *fc.mixing;
    FitResult g;
    g.names = {"gamma_mix_per_ns"};
    g.values = {mixing_rate(m.n1, m.n2, m.pulse_ns)};
    g.errors = {m.n1_stderr && m.n2_stderr ? mixing_rate_stderr(m.n1, m.n2, *m.n1_stderr, *m.n2_stderr, m.pulse_ns)
                                           : std::numeric_limits<double>::quiet_NaN()};
    g.residual_norm = 0.0;
    g.converged = true;
    g.message = "closed-form inversion";
    results.push_back(g);
  }

  auto out = open_output(c.out);
  write_fit_csv_header(out);
  bool all_converged = true;
  for (const auto& r : results) {
    write_fit_csv_rows(out, r);
    if (!r.converged) {
      all_converged = false;
      std::cerr << "sdiff fit: warning: " << (r.names.empty() ? "fit" : r.names.front()) << ": "
                << (r.message.empty() ? "did not converge" : r.message) << '\n';
    }
  }
  close_output(out, c.out);
  auto p = provenance(c, "fit", cfg.document);
  p.inputs = inputs;
  p.outputs = {c.out};
  write_provenance(sidecar_path(c.out), p);
  return c.strict && !all_converged ? kExitNoConvergence : kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_rc(const Common& c) {
  auto cfg = load_optional(c.config_path);
  const auto& em = need(cfg.emitter, "emitter");
  const auto& rc = need(cfg.rc, "rc");
  const std::uint64_t seed = need_seed(c);
  if (c.out.empty()) throw ConfigError("--out: required");

  const std::string table_path = derived_path(c.out, "_outcomes.csv");
  const std::string shots_path = derived_path(c.out, "_shots.csv");
  auto table = open_output(table_path);
  auto shots = open_output(shots_path);
  table << "probe_offset_ghz,shots,censored,probes,detections,probe_probability,stderr,mean_check_pulses\n";
  shots << "probe_offset_ghz,shot,check_pulses,probe_detected,censored\n";
  table.precision(12);
  shots.precision(12);
  std::vector<double> x, y, e;
  for (std::size_t i = 0; i < rc.probe_offsets_hz.size(); ++i) {
    RcSettings s = rc.settings;
    s.probe_offset_hz = rc.probe_offsets_hz[i];
    // independent key per sweep point
    const std::uint64_t point_seed = seed + 0x9E3779B97F4A7C15ull * (i + 1);
    const auto outcome = run_rc_sequence(em, s, point_seed, SimOptions{c.threads});
    const double ghz = s.probe_offset_hz * 1e-9;
    table << ghz << ',' << outcome.shots.size() << ',' << outcome.censored() << ',' << outcome.probes() << ','
          << outcome.detections() << ',' << outcome.probe_probability() << ','
          << outcome.probe_probability_stderr() << ',' << outcome.mean_check_pulses() << '\n';
    for (std::size_t k = 0; k < outcome.shots.size(); ++k) {
      const auto& sh = outcome.shots[k];
      shots << ghz << ',' << k << ',' << sh.check_pulses << ',' << (sh.probe_detected ? 1 : 0) << ','
            << (sh.censored ? 1 : 0) << '\n';
    }
    if (outcome.probes() > 0) {
      x.push_back(s.probe_offset_hz);
      y.push_back(outcome.probe_probability());
      e.push_back(outcome.probe_probability_stderr());
    }
  }
  close_output(table, table_path);
  close_output(shots, shots_path);
  std::vector<std::string> outputs{table_path, shots_path};

  int status = kExitOk;
  if (rc.fit_lorentzian && x.size() >= 5) {
    const std::string fit_path = derived_path(c.out, "_lineshape_fit.csv");
    const auto fit = renamed(fit_lineshape(x, y, LineShape::lorentzian, e), "conditioned_",
                             {"centre_hz", "fwhm_hz", "amplitude", "offset"});
    auto out = open_output(fit_path);
    write_fit_csv(out, fit);
    close_output(out, fit_path);
    outputs.push_back(fit_path);
    if (!fit.converged) {
      std::cerr << "sdiff rc: warning: conditioned lineshape fit: " << fit.message << '\n';
      if (c.strict) status = kExitNoConvergence;
    }
  }
  auto p = provenance(c, "rc", cfg.document);
  p.outputs = outputs;
  write_provenance(sidecar_path(c.out), p);
  return status;
}

// ---------------------------------------------------------------------------

struct SpeedupFlags {
  std::optional<double> eta_sd, eta_sd_rc, eta_det_min, eta_det_max;
  std::optional<std::uint64_t> n_min, n_max, eta_det_points;
};

int cmd_speedup(const Common& c, const SpeedupFlags& f) {
  auto cfg = load_optional(c.config_path);
  json section = cfg.document.value("speedup", json::object());
  if (f.eta_sd) section["eta_sd"] = *f.eta_sd;
  if (f.eta_sd_rc) section["eta_sd_rc"] = *f.eta_sd_rc;
  if (f.eta_det_min) section["eta_det_min"] = *f.eta_det_min;
  if (f.eta_det_max) section["eta_det_max"] = *f.eta_det_max;
  if (f.eta_det_points) section["eta_det_points"] = *f.eta_det_points;
  if (f.n_min) section["n_min"] = *f.n_min;
  if (f.n_max) section["n_max"] = *f.n_max;
  const auto sc = parse_speedup(section);
  if (c.out.empty()) throw ConfigError("--out: required");
  const auto grid = speedup_grid(sc.n_values, sc.eta_det_values, sc.eta_sd, sc.eta_sd_rc);
  auto out = open_output(c.out);
  write_grid_csv(out, grid);
  close_output(out, c.out);
  json effective = cfg.document;
  effective["speedup"] = section;
  auto p = provenance(c, "speedup", effective);
  p.outputs = {c.out};
  write_provenance(sidecar_path(c.out), p);
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_mix(const Common& c) {
  auto cfg = load_optional(c.config_path);
  const auto& mc = need(cfg.mix, "mix");
  const std::uint64_t seed = need_seed(c);
  if (c.out.empty()) throw ConfigError("--out: required");
  SpinMixOptions opt;
  opt.threads = c.threads;
  opt.bin_width_ns = mc.bin_width_ns;
  const auto r1 = simulate_spin_mixing(mc.model, SpinPrep::opposite, mc.shots, seed, opt);
  const auto r2 = simulate_spin_mixing(mc.model, SpinPrep::same, mc.shots, seed + 0x9E3779B97F4A7C15ull, opt);
  const auto exact = spin_mix_populations(mc.model);

  const std::string pop_path = derived_path(c.out, "_populations.csv");
  const std::string tr_path = derived_path(c.out, "_transients.csv");
  const std::string fit_path = derived_path(c.out, "_fit.csv");
  auto pop = open_output(pop_path);
  pop.precision(12);
  pop << "prepared,n_target,stderr,rate_equation\n";
  pop << "opposite," << r1.n_target << ',' << r1.n_target_stderr << ',' << exact.n1 << '\n';
  pop << "same," << r2.n_target << ',' << r2.n_target_stderr << ',' << exact.n2 << '\n';
  close_output(pop, pop_path);

  auto tr = open_output(tr_path);
  tr << "bin_start_ns,counts_opposite,counts_same\n";
  for (std::size_t i = 0; i < r1.transient_counts.size(); ++i)
    tr << r1.bin_edges_ns[i] << ',' << r1.transient_counts[i] << ',' << r2.transient_counts[i] << '\n';
  close_output(tr, tr_path);

  auto fit_out = open_output(fit_path);
  write_fit_csv_header(fit_out);
  bool converged = true;
  if (r1.n_target < r2.n_target) {
    FitResult g;
    g.names = {"gamma_mix_per_ns"};
    g.values = {mixing_rate(r1.n_target, r2.n_target, mc.model.pulse_duration_ns)};
    g.errors = {mixing_rate_stderr(r1.n_target, r2.n_target, r1.n_target_stderr, r2.n_target_stderr,
                                   mc.model.pulse_duration_ns)};
    g.residual_norm = 0.0;
    g.converged = true;
    g.message = "closed-form inversion";
    write_fit_csv_rows(fit_out, g);
  } else {
    converged = false;
    std::cerr << "sdiff mix: warning: n1 >= n2; mixing rate undefined\n";
  }
  for (const auto* r : {&r1, &r2}) {
    std::vector<double> t, counts;
    for (std::size_t i = 0; i < r->transient_counts.size(); ++i)
      if (r->bin_edges_ns[i] >= mc.model.pulse_duration_ns && r->transient_counts[i] > 0) {
        t.push_back(r->bin_edges_ns[i]);
        counts.push_back(static_cast<double>(r->transient_counts[i]));
      }
    if (t.size() < 3) continue;
    auto fit = fit_exponential_decay(t, counts, mc.model.pulse_duration_ns);
    const std::string tag = r == &r1 ? "opposite_" : "same_";
    write_fit_csv_rows(fit_out, renamed(fit, tag, {"amplitude", "lifetime_ns"}));
    converged = converged && fit.converged;
  }
  close_output(fit_out, fit_path);
  auto p = provenance(c, "mix", cfg.document);
  p.outputs = {pop_path, tr_path, fit_path};
  write_provenance(sidecar_path(c.out), p);
  return c.strict && !converged ? kExitNoConvergence : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral diffusion simulator and inference toolkit"};
  app.set_version_flag("--version", SDIFF_VERSION);
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_config, bool stochastic) {
    auto* cfg = sub->add_option("-c,--config", common.config_path, "JSON run configuration");
    if (needs_config) cfg->required();
    if (stochastic) sub->add_option("--seed", common.seed, "master seed (required)")->required();
    sub->add_option("-j,--threads", common.threads, "worker threads (results do not depend on this)")
        ->check(CLI::PositiveNumber);
    sub->add_option("-o,--out", common.out, "output path");
  };

  std::string format_flag;
  auto* simulate = app.add_subcommand("simulate", "run a pulse sequence and write a photon event stream");
  add_common(simulate, true, true);
  simulate->add_option("--format", format_flag, "binary or csv")->check(CLI::IsMember({"binary", "csv"}));

  CorrelateFlags cf;
  auto* correlate = app.add_subcommand("correlate", "correlation curve from an event stream");
  add_common(correlate, false, false);
  correlate->add_option("-i,--in", cf.input, "event stream (binary or CSV)")->required();
  correlate->add_option("--mode", cf.mode, "g2 or two_colour")->check(CLI::IsMember({"g2", "two_colour"}));
  correlate->add_option("--channels", cf.channels, "channel_a channel_b")->expected(2);
  correlate->add_option("--window", cf.window, "first and last lag of the normalization window")->expected(2);
  correlate->add_option("--max-lag", cf.max_lag, "largest lag to report");
  correlate->add_option("--beta-correction", cf.beta_correction, "also write a background-corrected curve");

  auto* fit = app.add_subcommand("fit", "fit A, beta, lineshapes or mixing rates");
  add_common(fit, true, false);
  fit->add_flag("--strict", common.strict, "exit 3 if any fit fails to converge");

  auto* rc = app.add_subcommand("rc", "resonance-check sweep and conditioned lineshape");
  add_common(rc, true, true);
  rc->add_flag("--strict", common.strict, "exit 3 if the lineshape fit fails to converge");

  SpeedupFlags sf;
  auto* speed = app.add_subcommand("speedup", "speedup grid over N and eta_det");
  add_common(speed, false, false);
  speed->add_option("--eta-sd", sf.eta_sd);
  speed->add_option("--eta-sd-rc", sf.eta_sd_rc);
  speed->add_option("--eta-det-min", sf.eta_det_min);
  speed->add_option("--eta-det-max", sf.eta_det_max);
  speed->add_option("--eta-det-points", sf.eta_det_points);
  speed->add_option("--n-min", sf.n_min);
  speed->add_option("--n-max", sf.n_max);

  auto* mix = app.add_subcommand("mix", "excited-state spin mixing populations and transients");
  add_common(mix, true, true);
  mix->add_flag("--strict", common.strict, "exit 3 if a fit fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(common, format_flag);
    if (*correlate) return cmd_correlate(common, cf);
    if (*fit) return cmd_fit(common);
    if (*rc) return cmd_rc(common);
    if (*speed) return cmd_speedup(common, sf);
    if (*mix) return cmd_mix(common);
  } catch (const IoError& e) {
    std::cerr << "sdiff: I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "sdiff: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "sdiff: input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "sdiff: error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
