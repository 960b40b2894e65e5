#pragma once

// Configuration document shared by the service and the command-line tool.
//
// One JSON object with the sections "service", "engine", "classifier" and
// "sim". Values resolve as defaults < config file < environment < command
// line. Every scalar leaf can be overridden from the environment as
// OERREC_<SECTION>_<KEY> (nested keys joined by '_', upper case), e.g.
// OERREC_ENGINE_GD_LEARNING_RATE, and from the command line as
// section.key=value. Unknown keys are rejected.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oerrec/classifier.hpp"
#include "oerrec/engine.hpp"
#include "oerrec/sim.hpp"

namespace oerrec {

struct RepositorySource {
  std::string name;
  std::string fixture;   // JSON-lines file, fixture mode
  std::string base_url;  // live mode
  std::string path = "/";

  bool operator==(const RepositorySource&) const = default;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // [0, 65535]; 0 binds a free port
  std::string data_dir = "oerrec-data";
  std::string connector_mode = "fixture";  // fixture | live
  std::vector<RepositorySource> repositories;
  std::string profiles;   // job-profile TSV imported when the state has none
  std::string vacancies;  // vacancy CSV for the importance refresh
  std::string skills;     // skill-term file for the importance refresh
  std::string model;      // classifier model; heading rules when empty
  int scheduler_seconds = 86400;  // [0, 31536000]; 0 disables the scheduler
  int snapshot_every = 100;       // [1, 1000000] journaled events between snapshots
  int threads = 8;                // [1, 256]

  void validate() const;
};

/// Defaults for every section.
Json default_config();

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;
EnvLookup process_env();

/// Merges `file` (when non-empty) into the defaults, then the environment,
/// then `overrides` ("section.key=value"). Throws ConfigError on unreadable
/// files, unknown keys or values of the wrong type.
Json resolve_config(const std::string& file, const EnvLookup& env = process_env(),
                    const std::vector<std::string>& overrides = {});

/// Each throws ConfigError naming the offending key when a value is out of range.
ServiceConfig service_config(const Json& doc);
EngineConfig engine_config(const Json& doc);
ClassifierHyper classifier_config(const Json& doc);
SimConfig sim_config(const Json& doc);

/// The environment variable for a dotted key ("engine.gd.tolerance").
std::string env_name(std::string_view dotted_key);

}  // namespace oerrec
