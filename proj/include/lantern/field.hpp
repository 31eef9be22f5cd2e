#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "lantern/conditioning.hpp"
#include "lantern/field_eval.hpp"
#include "lantern/hash_grid.hpp"
#include "lantern/mlp.hpp"

namespace lantern {

// Conditioning route of the radiance field.
//   kUnconditioned: plain positional field, no landmark input.
//   kGlo:           conditional feature concatenated at the sigma-net input.
//   kMaglo:         per-layer affine modulation of sigma-net intermediates.
//   kMagloProgressive: kMaglo plus the coarse-to-fine positional mask
//                      during training.
enum class Variant { kUnconditioned, kGlo, kMaglo, kMagloProgressive };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

// Real spherical-harmonics basis through degree 3 (16 values) for the view
// direction. Component order: (l, m) with l ascending and m from -l to l,
// i.e. Y00, Y1-1, Y10, Y11, Y2-2 ... Y33. d must be unit within 1e-6.
std::array<double, 16> dir_encode(const double d[3]);
inline constexpr int kDirEncodeWidth = 16;

// sigma = exp(clamp(raw, -15, 15)); strictly positive with a hard floor.
double density_activation(double raw);
double density_activation_grad(double raw);

struct FieldConfig {
  Variant variant = Variant::kMagloProgressive;
  GridConfig pos_grid;                         // positional encoder
  GridConfig lm_grid;                          // landmark encoder
  int landmarks = 68;
  int window = 1;                              // landmark frames per feature
  std::vector<int> cond_mlp_hidden = {128, 128};
  int d_cond = 64;
  int sigma_layers = 3;
  int sigma_hidden = 128;
  int geom_features = 128;                     // G; sigma net emits 1 + G
  int color_layers = 2;
  int color_hidden = 64;
  std::vector<int> modulated_layers;           // empty = every hidden layer
  bool modulate_color = false;
  bool branch_raw_input = false;               // branches read hhat directly

  FieldConfig() {
    pos_grid.features_per_level = 4;
    lm_grid.features_per_level = 2;
  }
};

struct FieldDef {
  Variant variant = Variant::kUnconditioned;
  GridDef pos_grid;
  std::optional<CondEncoderDef> cond;
  std::vector<LinearDef> sigma_net;
  std::vector<LinearDef> color_net;
  std::vector<LinearDef> branches;    // one per entry of modulated_layers
  std::vector<int> modulated_layers;  // hidden-layer indices in the sigma net
  bool modulate_color = false;
  LinearDef color_branch;
  int geom = 0;
  int sigma_in = 0;  // encoder width, plus d_cond under GLO

  bool conditioned() const { return variant != Variant::kUnconditioned; }
  int cond_width() const { return cond ? cond->d_cond : 0; }
};

FieldDef create_field(const FieldConfig& cfg, ParamStore& store,
                      std::uint64_t seed);

// Per-frame conditioning context in engine precision: the conditional
// feature, its encoder cache (for the backward pass) and the branch outputs.
struct FrameContext {
  std::vector<real> h_cond;
  CondCache cond_cache;
};

FrameContext make_frame_context(const FieldDef& def, const ParamStore& store,
                                std::span<const LandmarkFrame> window);

// Conditioning inputs consumed by the per-sample pipeline, cast to the
// pipeline precision.
template <class T>
struct FrameCond {
  std::vector<T> h_cond;
  std::vector<std::vector<T>> alpha;  // per modulated sigma layer
  std::vector<std::vector<T>> beta;
  std::vector<T> color_alpha;
  std::vector<T> color_beta;
};

template <class T>
FrameCond<T> make_frame_cond(const FieldDef& def, const ParamStore& store,
                             const FrameContext& ctx);

// Forward caches for one evaluated chunk.
template <class T>
struct FieldFwdCache {
  std::size_t count = 0;
  std::vector<T> x0;                      // sigma-net input (post concat)
  std::vector<std::vector<T>> pre_mod;    // per modulated layer
  std::vector<std::vector<T>> pre_act;    // per sigma layer (post mod)
  std::vector<std::vector<T>> act;        // per sigma layer
  std::vector<T> raw_sigma;
  std::vector<T> color_in;                // [geom | sh]
  std::vector<T> color_pre_mod;
  std::vector<std::vector<T>> color_pre_act;
  std::vector<std::vector<T>> color_act;
  std::vector<T> rgb;                     // post sigmoid
};

// Per-chunk gradient accumulators in pipeline precision.
template <class T>
struct FieldGradAcc {
  std::vector<std::vector<T>> pos_tables;
  std::vector<std::vector<T>> sigma_w, sigma_b;
  std::vector<std::vector<T>> color_w, color_b;
  std::vector<std::vector<T>> dalpha, dbeta;
  std::vector<T> color_dalpha, color_dbeta;
  std::vector<T> dh_cond;  // GLO input-concat route

  void init(const FieldDef& def);
  void reset();
};

void cast_grad_acc(const FieldGradAcc<float>& src, FieldGradAcc<double>& dst);

// Batched sample pipeline over the field parameters viewed at precision T.
// For T == real it references the ParamStore directly; for float it owns
// converted copies refreshed by sync() after each optimizer step.
template <class T>
class FieldPipeline {
 public:
  explicit FieldPipeline(const FieldDef& def) : def_(&def) {}

  void sync(const ParamStore& store);

  // pts: count x 3 in the unit cube; dirs: count x 3 unit vectors.
  // cond must be non-null iff the field is conditioned.
  void forward(const double* pts, const double* dirs, std::size_t count,
               const LevelMask& mask, const FrameCond<T>* cond, T* sigma,
               T* rgb, FieldFwdCache<T>* cache = nullptr) const;

  // Density-only forward (occupancy maintenance); skips the color head and
  // the geometry rows of the sigma-net output.
  void forward_sigma(const double* pts, std::size_t count,
                     const LevelMask& mask, const FrameCond<T>* cond,
                     T* sigma) const;

  void backward(const FieldFwdCache<T>& cache, const double* pts,
                std::size_t count, const LevelMask& mask,
                const FrameCond<T>* cond, const T* dsigma, const T* drgb,
                FieldGradAcc<T>& acc) const;

  const FieldDef& def() const { return *def_; }

 private:
  const FieldDef* def_;
  std::vector<const T*> pos_tables_;
  std::vector<LinearView<T>> sigma_views_;
  std::vector<LinearView<T>> color_views_;
  std::vector<std::vector<T>> owned_;  // backing storage when T != real
};

// Folds a chunk's gradient accumulators into the shared GradBuffer:
// grid-table and net gradients directly, modulation gradients through the
// affine branches, and the conditional-feature gradient through the
// landmark encoder.
void apply_field_grads(const FieldDef& def, const ParamStore& store,
                       const FrameContext* ctx, const FieldGradAcc<real>& acc,
                       GradBuffer& grads);

// FieldEval adapter over a synced pipeline with a fixed frame condition;
// used by the renderer, occupancy maintenance and the CLI.
template <class T>
class NeuralFieldEval final : public FieldEval {
 public:
  NeuralFieldEval(const FieldPipeline<T>& pipe, const FrameCond<T>* cond,
                  LevelMask mask)
      : pipe_(&pipe), cond_(cond), mask_(mask) {}

  void eval(const double* pts, const double* dirs, std::size_t count,
            double* sigma, double* rgb) const override {
    if constexpr (std::is_same_v<T, double>) {
      pipe_->forward(pts, dirs, count, mask_, cond_, sigma, rgb);
    } else {
      std::vector<T> s(count), c(count * 3);
      pipe_->forward(pts, dirs, count, mask_, cond_, s.data(), c.data());
      for (std::size_t i = 0; i < count; ++i) sigma[i] = s[i];
      for (std::size_t i = 0; i < count * 3; ++i) rgb[i] = c[i];
    }
  }

  void eval_sigma(const double* pts, std::size_t count,
                  double* sigma) const override {
    if constexpr (std::is_same_v<T, double>) {
      pipe_->forward_sigma(pts, count, mask_, cond_, sigma);
    } else {
      std::vector<T> s(count);
      pipe_->forward_sigma(pts, count, mask_, cond_, s.data());
      for (std::size_t i = 0; i < count; ++i) sigma[i] = s[i];
    }
  }

 private:
  const FieldPipeline<T>* pipe_;
  const FrameCond<T>* cond_;
  LevelMask mask_;
};

// Single-sample evaluation (test/reference surface).
struct FieldOutput {
  double sigma = 0;
  std::array<double, 3> rgb = {0, 0, 0};
  std::vector<double> geom;
};

FieldOutput eval_field(const FieldDef& def, const ParamStore& store,
                       const double x[3], const double d[3],
                       const FrameContext* ctx, const LevelMask& mask);

}  // namespace lantern
