#pragma once

#include <json.hpp>

#include <string>

#include "lantern/field.hpp"
#include "lantern/scene.hpp"
#include "lantern/trainer.hpp"

namespace lantern {

struct EvalConfig {
  int samples = 256;
  int cameras_per_config = 0;  // 0: every camera
  bool use_pruning = true;
};

// One experiment description: scene or dataset, model widths, training
// schedule, evaluation settings. Parsed strictly (unknown keys rejected)
// and re-emitted with every default materialized.
struct RunConfig {
  std::string variant = "maglo-progressive";
  std::string kernel_backend = "auto";  // auto | scalar | avx2
  std::uint64_t seed = 1;
  std::string dataset;  // directory; empty when only gen-data is used
  SceneSpec scene;
  FieldConfig model;  // landmarks filled from the dataset at build time
  TrainConfig train;
  EvalConfig eval;
};

nlohmann::json default_run_config_json();

// Strict overlay of `user` onto the defaults: every key must exist in the
// default tree with a compatible type. Returns the fully materialized tree.
nlohmann::json resolve_run_config_json(const nlohmann::json& user);

RunConfig run_config_from_json(const nlohmann::json& resolved);

// Load + resolve from a file ('{}' semantics for an absent path is not
// provided: the file must exist and be valid JSON).
RunConfig load_run_config(const std::string& path, nlohmann::json* resolved_out = nullptr);

// Serializes exactly the resolved tree the config was built from.
nlohmann::json run_config_to_json(const RunConfig& cfg);

void write_resolved_config(const nlohmann::json& resolved,
                           const std::string& dir);

// Applies the backend choice ("auto" keeps the detected default).
void apply_kernel_backend(const std::string& name);

}  // namespace lantern
