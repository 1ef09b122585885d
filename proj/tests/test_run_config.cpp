#include <gtest/gtest.h>

#include "sdiff/cli/provenance.hpp"
#include "sdiff/cli/run_config.hpp"

using namespace sdiff;
using namespace sdiff::cli;

namespace {
json minimal() {
  return json::parse(R"({
    "emitter": {"sigma_inhom_ghz": 0.723, "gamma_hom_mhz": 16.9, "a_per_pulse": 0.045, "eta_det": 0.3},
    "sequence": {"repeats": 1000, "pulses": [
      {"frequency_offset_ghz": 0.0, "power_psat": 1.0, "duration_ns": 900, "dark_after_ns": 160, "channel": 0},
      {"frequency_offset_ghz": 0.70, "power_psat": 1.0, "duration_ns": 900, "dark_after_ns": 160, "channel": 1}]}
  })");
}

std::string error_of(const json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST(RunConfig, ParsesUnitsAtTheBoundary) {
  const auto c = parse_run_config(minimal());
  ASSERT_TRUE(c.emitter && c.sequence);
  EXPECT_DOUBLE_EQ(c.emitter->sigma_inhom_hz, 0.723e9);
  EXPECT_DOUBLE_EQ(c.emitter->gamma_hom_hz, 16.9e6);
  EXPECT_DOUBLE_EQ(c.sequence->pulses[1].frequency_offset_hz, 0.70e9);
  EXPECT_EQ(c.sequence->repeats, 1000u);
  EXPECT_EQ(c.sequence->pulses[1].channel_label, 1);
}

TEST(RunConfig, RejectsUnknownKeysWithPath) {
  auto j = minimal();
  j["emitter"]["sigma_inhom"] = 1.0;
  EXPECT_EQ(error_of(j), "emitter.sigma_inhom: unknown key");
  j = minimal();
  j["sequence"]["pulses"][1]["power_mw"] = 1.0;
  EXPECT_EQ(error_of(j), "sequence.pulses[1].power_mw: unknown key");
  j = minimal();
  j["colour"] = 1;
  EXPECT_EQ(error_of(j), "colour: unknown key");
}

TEST(RunConfig, NegativeDurationNamesTheField) {
  auto j = minimal();
  j["sequence"]["pulses"][0]["duration_ns"] = -5;
  EXPECT_EQ(error_of(j), "sequence.pulses[0].duration_ns: must be >= 0");
}

TEST(RunConfig, TypeAndRangeErrors) {
  auto j = minimal();
  j["emitter"]["beta"] = "high";
  EXPECT_EQ(error_of(j), "emitter.beta: expected a number");
  j = minimal();
  j["emitter"]["beta"] = 1.0;
  EXPECT_EQ(error_of(j), "emitter.beta: must lie in [0, 1)");
  j = minimal();
  j["sequence"]["repeats"] = -3;
  EXPECT_EQ(error_of(j), "sequence.repeats: must be >= 0");
  j = minimal();
  j["sequence"].erase("repeats");
  EXPECT_EQ(error_of(j), "sequence.repeats: required key missing");
  j = minimal();
  j["sequence"]["pulses"][1]["channel"] = 2;
  EXPECT_NE(error_of(j).find("dense"), std::string::npos) << error_of(j);
  j = minimal();
  j["emitter"]["gamma_hom_mhz"] = 5000.0;
  EXPECT_NE(error_of(j).find("emitter.gamma_hom_mhz"), std::string::npos);
  j = minimal();
  j["sequence"]["window_length_ns"] = 2000.0;
  EXPECT_NE(error_of(j).find("window must fit"), std::string::npos);
}

TEST(RunConfig, EmptyAndMalformedText) {
  EXPECT_THROW(parse_json_text("   \n", "x.json"), ConfigError);
  EXPECT_THROW(parse_json_text("{\"a\": ", "x.json"), ConfigError);
  EXPECT_THROW(parse_run_config(json::array()), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/dir/config.json"), IoError);
}

TEST(RunConfig, Sections) {
  auto j = json::parse(R"({
    "correlate": {"mode": "g2", "window_first_lag": 100, "window_last_lag": 150},
    "fit": {"curves": [{"path": "a.csv", "delta1_sigma": 0, "delta2_sigma": 0.97}],
            "beta_rates": {"r_signal_1_hz": 1, "r_signal_2_hz": 1, "r_noise_hz": 1}},
    "rc": {"shots": 100, "probe_points": 5, "probe_span_ghz": 0.2},
    "speedup": {"eta_sd": 0.01, "eta_sd_rc": 0.3, "eta_det_points": 3},
    "mix": {"gamma_mix_per_ns": 0.005}
  })");
  const auto c = parse_run_config(j);
  EXPECT_EQ(c.correlate->mode, CorrelateMode::g2);
  EXPECT_EQ(c.correlate->max_lag, 150);
  EXPECT_EQ(c.fit->curves.at(0).delta2_sigma, 0.97);
  ASSERT_EQ(c.rc->probe_offsets_hz.size(), 5u);
  EXPECT_DOUBLE_EQ(c.rc->probe_offsets_hz.front(), -0.1e9);
  EXPECT_EQ(c.speedup->n_values.size(), 12u);
  EXPECT_DOUBLE_EQ(c.speedup->eta_det_values.at(1), 0.1);
  EXPECT_EQ(c.mix->model.gamma_mix_per_ns, 0.005);
}

TEST(RunConfig, FitNeedsBetaForCurves) {
  auto j = json::parse(R"({"fit": {"curves": [{"path": "a.csv"}]}})");
  EXPECT_NE(error_of(j).find("fit.beta"), std::string::npos);
  j = json::parse(R"({"fit": {"beta": 0.1, "beta_rates": {"r_signal_1_hz": 1, "r_signal_2_hz": 1, "r_noise_hz": 1}}})");
  EXPECT_NE(error_of(j).find("either"), std::string::npos);
  j = json::parse(R"({"fit": {"curves": [{"path": "a.csv", "beta": 0.1}, {"path": "b.csv", "beta": 0.3}]}})");
  EXPECT_EQ(error_of(j), "");
  EXPECT_EQ(parse_run_config(j).fit->curves[1].beta, 0.3);
  j["fit"]["curves"][1]["beta"] = 1.5;
  EXPECT_EQ(error_of(j), "fit.curves[1].beta: must lie in [0, 1)");
}

TEST(Provenance, HashIsCanonical) {
  const auto a = json::parse(R"({"b": 1, "a": [1, 2]})");
  const auto b = json::parse("{\"a\":[1,2],\n \"b\":1}");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(json::parse(R"({"b": 2, "a": [1, 2]})")));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cull), "af63dc4c8601ec8c");
}

TEST(Provenance, RecordsSeedVersionAndHash) {
  Provenance p;
  p.tool_version = "1.2.3";
  p.command = "simulate";
  p.config = minimal();
  p.seed = 42;
  const auto j = provenance_json(p);
  EXPECT_EQ(j.at("seed"), 42);
  EXPECT_EQ(j.at("tool_version"), "1.2.3");
  EXPECT_EQ(j.at("config_hash"), config_hash(minimal()));
  EXPECT_EQ(j.at("config"), minimal());
}
