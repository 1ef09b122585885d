#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("sdiff_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }
  void write(const std::string& name, const json& j) const { write(name, j.dump(2)); }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  /// Runs the CLI with `args`; stderr is kept in last_stderr.
  int run(const std::string& args) {
    const std::string err = path("stderr.txt");
    const std::string cmd = std::string("\"") + SDIFF_CLI_PATH + "\" " + args + " > /dev/null 2> \"" + err + "\"";
    const int status = std::system(cmd.c_str());
    last_stderr = read("stderr.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string last_stderr;
  fs::path dir_;
};

json two_colour_config(std::uint64_t repeats) {
  auto j = json::parse(R"({
    "emitter": {"sigma_inhom_ghz": 0.723, "gamma_hom_mhz": 16.9, "a_per_pulse": 0.045, "eta_det": 1.0,
                "p_ref_psat": 1.0},
    "sequence": {"pulses": [
      {"frequency_offset_ghz": 0.0, "power_psat": 1.0, "duration_ns": 900, "dark_after_ns": 160, "channel": 0},
      {"frequency_offset_ghz": 0.70, "power_psat": 1.0, "duration_ns": 900, "dark_after_ns": 160, "channel": 1}]}
  })");
  j["sequence"]["repeats"] = repeats;
  return j;
}

}  // namespace

TEST_F(Cli, SimulateIsReproducibleAndThreadIndependent) {
  write("run.json", two_colour_config(300000));
  ASSERT_EQ(run("simulate -c " + path("run.json") + " --seed 11 -o " + path("a.bin")), 0) << last_stderr;
  const std::string first = read("a.bin");
  const std::string first_sidecar = read("a.bin.provenance.json");
  ASSERT_EQ(run("simulate -c " + path("run.json") + " --seed 11 -j 3 -o " + path("a.bin")), 0) << last_stderr;
  EXPECT_GT(first.size(), 16u);
  EXPECT_EQ(read("a.bin"), first);
  ASSERT_EQ(run("simulate -c " + path("run.json") + " --seed 12 -o " + path("c.bin")), 0) << last_stderr;
  EXPECT_NE(read("c.bin"), first);

  const auto prov = json::parse(first_sidecar);
  EXPECT_EQ(prov.at("seed"), 11);
  EXPECT_EQ(prov.at("command"), "simulate");
  EXPECT_TRUE(prov.at("config_hash").get<std::string>().starts_with("fnv1a64:"));
  EXPECT_FALSE(prov.at("tool_version").get<std::string>().empty());
  EXPECT_EQ(prov.at("config_hash"), json::parse(read("a.bin.provenance.json")).at("config_hash"));
  EXPECT_EQ(json::parse(read("a.bin.provenance.json")).at("threads"), 3);
}

TEST_F(Cli, CsvStreamHasHeader) {
  write("run.json", two_colour_config(20000));
  ASSERT_EQ(run("simulate -c " + path("run.json") + " --seed 1 --format csv -o " + path("e.csv")), 0) << last_stderr;
  EXPECT_TRUE(read("e.csv").starts_with("time_ns,pulse_index,channel,origin\n"));
}

TEST_F(Cli, MissingSeedIsAConfigError) {
  write("run.json", two_colour_config(100));
  EXPECT_EQ(run("simulate -c " + path("run.json") + " -o " + path("a.bin")), 1);
}

TEST_F(Cli, NegativeDurationNamesTheField) {
  auto j = two_colour_config(100);
  j["sequence"]["pulses"][0]["duration_ns"] = -5.0;
  write("run.json", j);
  EXPECT_EQ(run("simulate -c " + path("run.json") + " --seed 1 -o " + path("a.bin")), 1);
  EXPECT_NE(last_stderr.find("sequence.pulses[0].duration_ns"), std::string::npos) << last_stderr;
  EXPECT_FALSE(fs::exists(path("a.bin")));
}

TEST_F(Cli, UnknownKeyIsRejected) {
  auto j = two_colour_config(100);
  j["emitter"]["lifetime"] = 691.0;
  write("run.json", j);
  EXPECT_EQ(run("simulate -c " + path("run.json") + " --seed 1 -o " + path("a.bin")), 1);
  EXPECT_NE(last_stderr.find("emitter.lifetime: unknown key"), std::string::npos) << last_stderr;
}

TEST_F(Cli, MalformedJsonIsAConfigError) {
  write("run.json", std::string("{\"emitter\": "));
  EXPECT_EQ(run("simulate -c " + path("run.json") + " --seed 1 -o " + path("a.bin")), 1);
}

TEST_F(Cli, MissingConfigFileIsAnIoError) {
  EXPECT_EQ(run("simulate -c " + path("absent.json") + " --seed 1 -o " + path("a.bin")), 2);
}

TEST_F(Cli, UnwritableOutputIsAnIoError) {
  write("run.json", two_colour_config(100));
  EXPECT_EQ(run("simulate -c " + path("run.json") + " --seed 1 -o " + path("no/such/dir/a.bin")), 2);
}

TEST_F(Cli, EmptyStreamCannotBeCorrelated) {
  write("empty.bin", std::string());
  EXPECT_EQ(run("correlate -i " + path("empty.bin") + " -o " + path("c.csv")), 1);
  EXPECT_EQ(run("correlate -i " + path("absent.bin") + " -o " + path("c.csv")), 2);
}

TEST_F(Cli, BetaFromEqualRates) {
  write("fit.json", json::parse(R"({"fit": {"beta_rates": {"r_signal_1_hz": 40, "r_signal_2_hz": 40,
                                                            "r_noise_hz": 40}}})"));
  ASSERT_EQ(run("fit -c " + path("fit.json") + " -o " + path("beta.csv")), 0) << last_stderr;
  const std::string out = read("beta.csv");
  EXPECT_TRUE(out.starts_with("parameter,estimate,uncertainty,residual_norm,dof,converged,status\n"));
  EXPECT_NE(out.find("\nbeta,0.75,"), std::string::npos) << out;
}

TEST_F(Cli, FlatCurveIsUnidentifiable) {
  std::ostringstream curve;
  curve << "lag,value,stderr\n";
  for (int lag = 1; lag <= 399; lag += 2) curve << lag << ",1,0.01\n";
  write("flat.csv", curve.str());
  write("fit.json", json::parse(R"({"fit": {"beta": 0.0,
      "curves": [{"path": "flat.csv", "delta1_sigma": 0.0, "delta2_sigma": 0.0}]}})"));
  EXPECT_EQ(run("fit -c " + path("fit.json") + " -o " + path("A.csv")), 0) << last_stderr;
  EXPECT_NE(read("A.csv").find("unidentifiable"), std::string::npos);
  EXPECT_NE(last_stderr.find("warning"), std::string::npos);
  EXPECT_EQ(run("fit -c " + path("fit.json") + " --strict -o " + path("A.csv")), 3);
}

TEST_F(Cli, SpeedupGridCsv) {
  ASSERT_EQ(run("speedup --eta-sd 0.01 --eta-sd-rc 0.3 --n-min 1 --n-max 3 --eta-det-points 4 -o " + path("grid.csv")), 0) << last_stderr;
  const std::string out = read("grid.csv");
  EXPECT_TRUE(out.starts_with("N,eta_det,speedup,flag_le1\n"));
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 1 + 3 * 4);
  EXPECT_TRUE(fs::exists(path("grid.provenance.json")));
}

TEST_F(Cli, SimulateCorrelateFitPipeline) {
  write("run.json", two_colour_config(2000000));
  ASSERT_EQ(run("simulate -c " + path("run.json") + " --seed 5 -o " + path("s.bin")), 0) << last_stderr;
  ASSERT_EQ(run("correlate -i " + path("s.bin") + " --mode two_colour --channels 0 1 -o " + path("curve.csv")), 0)
      << last_stderr;
  EXPECT_TRUE(read("curve.csv").starts_with("lag,value,stderr\n"));
  write("fit.json", json::parse(R"({"fit": {"beta": 0.0,
      "curves": [{"path": "curve.csv", "delta1_sigma": 0.0, "delta2_sigma": 0.968}]}})"));
  ASSERT_EQ(run("fit -c " + path("fit.json") + " --strict -o " + path("A.csv")), 0) << last_stderr;
  std::istringstream rows(read("A.csv"));
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  ASSERT_TRUE(line.starts_with("A,")) << line;
  const double a = std::stod(line.substr(2));
  EXPECT_NEAR(a, 0.045, 0.25 * 0.045);
}
