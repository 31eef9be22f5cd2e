#pragma once

#include <string>

#include "lantern/adamw.hpp"
#include "lantern/field.hpp"
#include "lantern/occupancy.hpp"
#include "lantern/scene.hpp"

namespace lantern {

enum class Precision { kF64, kF32 };

Precision precision_from_string(const std::string& s);
std::string precision_to_string(Precision p);

struct TrainConfig {
  int total_steps = 6000;
  int rays_per_step = 4096;
  double lr_grid = 1e-2;
  double lr_mlp = 1e-3;
  // Schedule milestones as fractions of total_steps; the lr multiplier is
  // 1 before milestone1, 0.1 before milestone2, 0.01 until the fine-tune
  // start, then resets and replays the same pattern inside the fine-tune
  // span.
  double milestone1 = 150.0 / 240.0;
  double milestone2 = 180.0 / 240.0;
  double finetune_start = 200.0 / 240.0;
  double lambda_patch = 0.01;
  int patch_size = 32;
  int schedule_initial = 4;    // L0
  int schedule_interval = 250; // steps per newly enabled level
  std::uint64_t seed = 1;
  Precision precision = Precision::kF64;
  int occ_resolution = 64;
  double occ_threshold = 0.5;  // 0.01 * scene amplitude for the desk scene
  double occ_decay = 0.95;
  int occ_update_interval = 16;
  int occ_conditions = 4;
  int train_samples = 128;
  int eval_samples = 256;
  int workers = 1;
  int log_interval = 250;
  int checkpoint_interval = 0;  // 0: final checkpoint only
};

void validate_train_config(const TrainConfig& cfg, int image_size);

// Piecewise learning-rate multiplier shared by both parameter groups.
double lr_multiplier(const TrainConfig& cfg, int step);

struct TrainLogRow {
  int step = 0;
  double loss_color = 0;
  double loss_patch = 0;  // perceptual term; 0 during stage 1
  int active_levels = 0;
  double probe_psnr = 0;
  std::uint64_t field_evals = 0;  // cumulative
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  void write_csv(const std::string& path) const;
};

struct TrainResult {
  TrainLog log;
  OccupancyGrid occupancy;
  std::uint64_t field_evals = 0;
  double seconds = 0;
  double final_loss_color = 0;
  double final_loss_patch = 0;
};

// Two-stage optimization: random-pixel color loss, then patch fine-tuning
// around the projected landmark centroid. Deterministic given cfg.seed
// (and a fixed worker count). When out_dir is non-empty, writes
// checkpoint.r2tk, occupancy.bin and train_log.csv there (plus interval
// checkpoints when configured).
TrainResult train(const Dataset& dataset, const FieldDef& def,
                  ParamStore& store, const TrainConfig& cfg,
                  const std::string& out_dir = "");

}  // namespace lantern
