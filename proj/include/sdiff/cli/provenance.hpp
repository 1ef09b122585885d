#pragma once

// Sidecar written next to every output: what ran, with which configuration
// and seed, and hashes of the files read and written.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "sdiff/cli/run_config.hpp"

namespace sdiff::cli {

struct Provenance {
  std::string tool_version;
  std::string command;
  json config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

inline std::string file_hash(const std::string& path) { return "fnv1a64:" + hex64(fnv1a64(read_file(path))); }

inline json provenance_json(const Provenance& p) {
  json j;
  j["tool"] = "sdiff";
  j["tool_version"] = p.tool_version;
  j["command"] = p.command;
  j["config_hash"] = config_hash(p.config);
  j["config"] = p.config;
  j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
  j["threads"] = p.threads;
  j["inputs"] = json::array();
  for (const auto& in : p.inputs) j["inputs"].push_back({{"path", in}, {"hash", file_hash(in)}});
  j["outputs"] = json::array();
  for (const auto& out : p.outputs) j["outputs"].push_back({{"path", out}, {"hash", file_hash(out)}});
  return j;
}

inline void write_provenance(const std::string& path, const Provenance& p) {
  const json j = provenance_json(p);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace sdiff::cli
