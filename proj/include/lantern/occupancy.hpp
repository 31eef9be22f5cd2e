#pragma once

#include <span>
#include <vector>

#include "lantern/common.hpp"
#include "lantern/field_eval.hpp"
#include "lantern/rng.hpp"

namespace lantern {

// Coarse voxel grid over the unit cube storing a running maximum of the
// field density across all observed conditions. A cell is occupied iff its
// stored value exceeds the threshold.
struct OccupancyGrid {
  int resolution = 64;
  double threshold = 0.5;
  double decay = 0.95;
  std::vector<double> values;  // resolution^3, x slowest / z fastest

  OccupancyGrid() = default;
  OccupancyGrid(int res, double thresh, double gamma);

  std::size_t cell_count() const { return values.size(); }
  std::size_t cell_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(x) * resolution + y) * resolution + z;
  }
  bool occupied_cell(std::size_t idx) const {
    return values[idx] > threshold;
  }
  // Point lookup with boundary clamping.
  bool occupied_at(const double p[3]) const;

  std::size_t occupied_count() const;
};

// One decay-and-max sweep: every cell is probed at a fresh jittered point
// for each condition, and the stored value becomes
// max(decay * old, max over conditions of sigma). The threshold is
// untouched.
void update_occupancy(OccupancyGrid& occ,
                      std::span<const FieldEval* const> conditions,
                      Pcg32& rng);

// Sidecar persistence (not part of the checkpoint container).
void save_occupancy(const OccupancyGrid& occ, const std::string& path);
OccupancyGrid load_occupancy(const std::string& path);

}  // namespace lantern
