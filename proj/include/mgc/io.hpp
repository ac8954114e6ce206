// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>
#include <string>

#include "mgc/errors.hpp"
#include "mgc/model.hpp"
#include "mgc/sim.hpp"
#include "mgc/synthesis.hpp"

namespace mgc::io {

using nlohmann::json;

struct Config {
  MicrogridSpec microgrid;
  SynthesisConfig synthesis;
  Scenario scenario;
  bool has_scenario = false;
  std::string hash;  // SHA-256 of the canonical microgrid section
};

// Throws Schema on malformed JSON, unknown keys, wrong types or out-of-range options.
// Physical parameters are not checked here; see find_violations.
Config parse_config(const std::string& text);
// Throws MissingInput when the file cannot be read.
Config load_config(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

json to_json(const MicrogridSpec& spec);
json to_json(const SynthesisConfig& config);
// Sorted keys, shortest round-trip numbers, two-space indent, trailing newline.
std::string dump(const json& j);
std::string sha256_hex(const std::string& data);
std::string config_hash(const MicrogridSpec& spec);

struct Bundle {
  std::string config_hash;
  int num_dgs = 0;
  int num_lines = 0;
  ControllerSet controllers;
};

inline constexpr const char* kBundleFormat = "mgcodesign-bundle/1";

json bundle_to_json(const ValidatedModel& model, const ControllerSet& c,
                    const SynthesisConfig& config, const std::string& hash,
                    const std::string& config_name);
// Throws Schema when a required field is missing or malformed.
Bundle bundle_from_json(const json& j);
Bundle load_bundle(const std::string& path);

json metrics_to_json(const Metrics& m, const SimTrace& trace, double gamma_tilde);

// Process exit code for an error kind.
int exit_code(ErrorKind kind);

}  // namespace mgc::io
