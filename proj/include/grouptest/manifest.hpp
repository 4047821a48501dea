#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grouptest/version.hpp"

namespace grouptest {

// Record of one CLI invocation: enough to reproduce every output file
// byte-for-byte.  An output path of "-" denotes stdout.  `results` holds the
// raw computed values before any display rendering (e.g. values above 1 that
// a table shows as "--").
struct RunManifest {
  std::string command;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version = grouptest::version();
  std::vector<std::string> outputs;
  nlohmann::json results = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["parameters"] = parameters;
    j["seed"] = seed;
    j["version"] = version;
    j["outputs"] = outputs;
    j["results"] = results;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.parameters = j.at("parameters");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.results = j.value("results", nlohmann::json::object());
    return m;
  }
};

inline void write_manifest(const RunManifest& manifest,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_manifest: cannot open " + path);
  out << manifest.to_json().dump(2) << '\n';
}

inline RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_manifest: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return RunManifest::from_json(j);
}

}  // namespace grouptest
