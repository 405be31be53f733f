#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace crlab::cli {

using Json = nlohmann::json;

inline const std::vector<std::string> kModes{"solve-overlay", "solve-underlay", "solve-multisu",
                                              "plan-frame",    "simulate",       "sweep"};

struct ExperimentConfig {
  std::string mode;
  Json doc;  // full effective document, presets merged
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
};

std::vector<std::string> preset_names();
// Full document for a named preset; ConfigError for unknown names.
Json preset(const std::string& name);

// Parse JSON text (a "preset" key pulls in that preset and merges the rest
// on top), then validate. ConfigError lists every violation found.
ExperimentConfig load_config_text(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);
ExperimentConfig from_document(Json doc);

// Every violated invariant, each naming the offending field.
std::vector<std::string> validate(const Json& doc);

// Nodes addressed by a dotted path; "*" fans out over array elements.
std::vector<Json*> resolve_path(Json& doc, const std::string& path);

// FNV-1a 64 over the canonical dump, as 16 hex digits.
std::string config_hash(const Json& doc);

struct RunOptions {
  int jobs = 1;
  bool quiet = false;
};

struct PointStatus {
  int index = 0;
  std::string value;  // sweep value, empty for single-point runs
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::string file;
};

struct RunReport {
  std::string hash;
  std::vector<PointStatus> points;
  int failures() const;
};

// Emits point_NNNN.csv per (value, seed), index.csv and manifest.json under
// cfg.output_dir. Failed points are recorded, never dropped.
RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

// Resolved worker count: CRLAB_THREADS when set, else `requested`.
int worker_count(int requested);

}  // namespace crlab::cli
