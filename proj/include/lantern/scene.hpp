#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lantern/camera.hpp"
#include "lantern/conditioning.hpp"
#include "lantern/field_eval.hpp"
#include "lantern/image.hpp"

namespace lantern {

// Synthetic landmark-driven scene: a sum of Gaussian density blobs whose
// centers are the landmarks fed to the model. Control points random-walk
// inside a margin box so every configuration stays clear of the cube faces.
struct SceneSpec {
  int control_points = 4;
  double gauss_width = 0.08;  // s, world units
  double amplitude = 50.0;    // A, density units
  std::vector<std::array<double, 3>> colors;  // per point; palette default
  int camera_count = 20;
  double camera_radius = 1.5;
  double camera_elevation = 0.25;  // radians above the equator
  int image_size = 64;
  std::array<double, 3> background = {0.1, 0.1, 0.1};
  int train_configs = 16;
  int holdout_configs = 4;
  double walk_step = 0.08;
  std::array<double, 3> box_lo = {0.2, 0.2, 0.2};
  std::array<double, 3> box_hi = {0.8, 0.8, 0.8};
  int gt_samples = 512;  // samples per ray for ground-truth renders
};

void validate_scene_spec(const SceneSpec& spec);

// Density/color oracle:
//   sigma = A * sum_k exp(-|x - p_k|^2 / (2 s^2))
//   rgb   = sum_k w_k c_k / sum_k w_k, background when the mass vanishes.
void analytic_field(const double x[3], const LandmarkFrame& frame,
                    const SceneSpec& spec, double& sigma, double rgb[3]);

class AnalyticFieldEval final : public FieldEval {
 public:
  AnalyticFieldEval(const SceneSpec& spec, const LandmarkFrame& frame)
      : spec_(&spec), frame_(&frame) {}
  void eval(const double* pts, const double* dirs, std::size_t count,
            double* sigma, double* rgb) const override;
  void eval_sigma(const double* pts, std::size_t count,
                  double* sigma) const override;

 private:
  const SceneSpec* spec_;
  const LandmarkFrame* frame_;
};

std::vector<Camera> make_camera_ring(const SceneSpec& spec);

struct LandmarkConfigs {
  std::vector<LandmarkFrame> frames;  // one per configuration
  std::vector<bool> holdout;          // split flag per configuration
};

// Seeded random walk inside the margin box; holdout configurations are
// interleaved so they stay inside the visited region.
LandmarkConfigs gen_landmark_configs(const SceneSpec& spec,
                                     std::uint64_t seed);

struct FrameRecord {
  int id = 0;
  int camera_id = 0;
  int config_id = 0;
  std::string split;  // "train" | "holdout"
  LandmarkFrame landmarks;
  std::string png_path;
  std::string raw_path;
};

struct Dataset {
  int format_version = 1;
  int image_size = 0;
  std::array<double, 3> background = {0, 0, 0};
  std::vector<Camera> cameras;
  std::vector<FrameRecord> frames;
  std::string root;

  int landmark_count() const {
    return frames.empty() ? 0 : frames.front().landmarks.count();
  }
  std::vector<std::size_t> split_indices(const std::string& split) const;
};

inline constexpr int kManifestVersion = 1;

// Renders ground truth for every (configuration, camera) pair with the
// analytic oracle, writes PNG + raw float images, landmark records and the
// manifest. Byte-identical for identical (spec, seed).
Dataset gen_dataset(const SceneSpec& spec, std::uint64_t seed,
                    const std::string& out_dir);

// Loads and validates a dataset directory; missing or inconsistent files
// are hard errors naming the offender.
Dataset load_dataset(const std::string& dir);

Image load_frame_image(const Dataset& ds, const FrameRecord& frame);

}  // namespace lantern
