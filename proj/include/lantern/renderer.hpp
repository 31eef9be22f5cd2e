#pragma once

#include <array>
#include <span>

#include "lantern/camera.hpp"
#include "lantern/field_eval.hpp"
#include "lantern/image.hpp"
#include "lantern/occupancy.hpp"
#include "lantern/rng.hpp"

namespace lantern {

// Samples of one ray that survived occupancy pruning. delta[i] is the
// quadrature step of sample i against the full (unpruned) stratification;
// pruned samples contribute exactly nothing (sigma = 0 closes their span).
struct SampleBatch {
  std::vector<double> t;
  std::vector<double> delta;
  std::vector<double> pos;  // kept * 3, clamped into the unit cube
  int total_strata = 0;

  std::size_t kept() const { return t.size(); }
};

// Stratified sampling over [t_near, t_far]: one jittered sample per stratum
// drawn from rng; samples in unoccupied cells are masked out and never
// reach the field.
SampleBatch march(const Ray& ray, const OccupancyGrid* occ, int n_samples,
                  Pcg32& rng);

struct CompositeOut {
  std::array<double, 3> rgb = {0, 0, 0};
  double t_final = 1.0;  // transmittance after the last sample
};

// Emission-absorption compositing:
//   T_i = prod_{j<i} exp(-sigma_j delta_j)
//   w_i = T_i (1 - exp(-sigma_i delta_i))
//   C   = sum_i w_i c_i + T_final * background
// weights (when non-null) receives the w_i; identities Sum w + T_final = 1
// hold to rounding because w_i is computed as T_i - T_{i+1}.
CompositeOut composite(std::span<const double> sigma,
                       std::span<const double> rgb,
                       std::span<const double> delta, const double bg[3],
                       double* weights = nullptr);

// Adjoint of composite w.r.t. sigma and colors for upstream dC.
void composite_backward(std::span<const double> sigma,
                        std::span<const double> rgb,
                        std::span<const double> delta, const double bg[3],
                        const double dC[3], std::span<double> dsigma,
                        std::span<double> drgb);

struct RenderStats {
  std::uint64_t field_evals = 0;  // samples sent to the field
  std::uint64_t rays = 0;
  std::uint64_t strata = 0;  // samples before pruning
  double seconds = 0;
};

// Per-pixel composite of the camera image. Deterministic given seed: each
// pixel's jitter stream is keyed by its index, independent of `workers`.
Image render_image(const Camera& cam, const FieldEval& field,
                   const OccupancyGrid* occ, int n_samples,
                   const double bg[3], std::uint64_t seed,
                   RenderStats* stats = nullptr, int workers = 1);

}  // namespace lantern
