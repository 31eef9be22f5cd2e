#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "lantern/hash_grid.hpp"
#include "lantern/mlp.hpp"

namespace lantern {

// One frame of driving landmarks, coordinates normalized into [0,1]^3.
struct LandmarkFrame {
  int frame_index = 0;
  std::vector<std::array<double, 3>> points;

  int count() const { return static_cast<int>(points.size()); }
  std::array<double, 3> centroid() const;
};

void validate_landmarks(const LandmarkFrame& frame);

// Plain-text landmark records: one line per frame, frame index followed by
// K x/y/z decimals, whitespace separated. Round-trips doubles losslessly.
void write_landmark_records(const std::string& path,
                            std::span<const LandmarkFrame> frames);
std::vector<LandmarkFrame> read_landmark_records(const std::string& path,
                                                 int expected_count = -1);

// Coarse-to-fine activation of positional grid levels:
// active(step) = min(total, initial + floor(step / interval)).
struct ProgressiveSchedule {
  int initial_levels = 4;
  int step_interval = 5000;
  int total_levels = 16;
};

LevelMask schedule_mask(const ProgressiveSchedule& sched, std::uint64_t step);

// Landmark grid + small MLP producing the per-frame conditional feature.
// The grid is always fully active; the progressive mask applies only to the
// positional grid. `window` frames are encoded and concatenated (most
// recent last) before the MLP.
struct CondEncoderDef {
  GridDef lm_grid;
  MlpDef mlp;
  int landmarks = 0;
  int window = 1;
  int d_cond = 0;
  // When false the conditional feature is the raw concatenated encoding
  // hhat itself (the Table-style wide-input route); no MLP is created and
  // d_cond equals hhat_width().
  bool use_mlp = true;

  int hhat_width() const {
    return window * landmarks * lm_grid.feature_width();
  }
};

CondEncoderDef create_cond_encoder(ParamStore& store, const std::string& prefix,
                                   int landmarks, int window,
                                   const GridConfig& lm_cfg,
                                   const std::vector<int>& mlp_hidden,
                                   int d_cond, std::uint64_t seed,
                                   bool use_mlp = true);

struct CondCache {
  std::vector<double> points;  // window*K x 3
  std::vector<real> hhat;
  MlpCache mlp_cache;
};

// h_cond for one frame window. frames.size() must equal def.window; each
// frame must carry def.landmarks points. Deterministic.
std::vector<real> encode_landmarks(const CondEncoderDef& def,
                                   const ParamStore& store,
                                   std::span<const LandmarkFrame> frames,
                                   CondCache* cache = nullptr);

// Adjoint of encode_landmarks: routes dL/dh_cond into the MLP weights and
// the landmark grid entries.
void cond_encoder_backward(const CondEncoderDef& def, const ParamStore& store,
                           const CondCache& cache,
                           std::span<const real> dh_cond, GradBuffer& grads);

// Elementwise conditioning transform I = I_hat * (1 + beta) + alpha.
std::vector<real> affine_modulate_vec(std::span<const real> intermediate,
                                      std::span<const real> alpha,
                                      std::span<const real> beta);

// Linear branch from the conditional feature to a (alpha, beta) pair for
// one target layer; alpha is the first half of the output.
struct AffineBranchOut {
  std::vector<real> alpha;
  std::vector<real> beta;
};

AffineBranchOut branch_params(const LinearDef& branch, const ParamStore& store,
                              std::span<const real> cond);

}  // namespace lantern
