#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lantern/param_store.hpp"
#include "lantern/rng.hpp"

namespace lantern {

struct GridConfig {
  int levels = 16;
  int features_per_level = 4;
  int log2_table_size = 16;  // T = 2^log2_table_size rows per hashed level
  int base_resolution = 32;
  int max_resolution = 2048;
  int input_dim = 3;  // 2 or 3
};

// Geometric growth factor between level resolutions; 1 when levels == 1.
double grid_growth_factor(const GridConfig& cfg);

// N_l = floor(N_min * b^l), clamped nondecreasing. N_0 == base_resolution
// and N_{L-1} == max_resolution.
int level_resolution(const GridConfig& cfg, int level);

struct GridLevelLayout {
  int resolution = 0;
  bool dense = false;   // dense iff (N_l+1)^d fits in the hash table
  std::size_t rows = 0;
};

// Progressive training mask: levels >= active_levels emit exactly zero
// features and receive exactly zero gradient.
struct LevelMask {
  int active_levels = 0;
  static LevelMask full(int levels) { return LevelMask{levels}; }
};

// Storage layout of one multi-resolution grid. Entry tables live in the
// ParamStore, one entry per level with shape [rows, F].
struct GridDef {
  GridConfig cfg;
  std::vector<GridLevelLayout> levels;
  std::vector<std::size_t> handles;  // ParamStore entry per level

  int feature_width() const { return cfg.levels * cfg.features_per_level; }
  std::size_t total_rows() const;
};

// Validates the config and computes the per-level layout (no parameters).
GridDef plan_grid(const GridConfig& cfg);

// Registers one table entry per level under "<prefix>/l<NN>" and fills it
// uniformly in [-1e-4, 1e-4] from a name-derived stream of `seed`.
GridDef create_grid(const GridConfig& cfg, ParamStore& store,
                    const std::string& prefix, std::uint64_t seed);

// Row index of an integer corner. Dense levels use row-major order with the
// first coordinate slowest; hashed levels XOR coordinate-prime products
// (primes 1, 2654435761, 805459861) in uint32 arithmetic, masked to T.
std::uint32_t hash_index(std::span<const int> cell, const GridLevelLayout& lvl,
                         const GridConfig& cfg);

// Encodes `count` points (row-major, input_dim columns, coordinates in
// [0,1]) into `out` (count x L*F). Points are interpolated d-linearly from
// the 2^d enclosing corners per active level; masked levels write zeros.
// Coordinates outside [0,1] by at most 1e-6 are clamped (and counted, see
// grid_clamp_warnings); anything further is an error.
template <class T>
void grid_encode(const GridDef& def, std::span<const T* const> tables,
                 const double* points, std::size_t count,
                 const LevelMask& mask, T* out);

// Adjoint of grid_encode into per-level gradient tables. Each corner entry
// of each active level receives upstream * interpolation weight.
template <class T>
void grid_encode_backward(const GridDef& def, const double* points,
                          std::size_t count, const LevelMask& mask,
                          const T* upstream, std::span<T* const> table_grads);

// Number of queries that needed the 1e-6 boundary clamp so far.
std::uint64_t grid_clamp_warnings();

// Convenience single-point wrappers over the batched forms (engine real).
std::vector<real> grid_encode_point(const GridDef& def,
                                    const ParamStore& store,
                                    std::span<const double> p,
                                    const LevelMask& mask);

// Pointers into the store's level tables, in level order.
std::vector<const real*> grid_table_view(const GridDef& def,
                                         const ParamStore& store);
std::vector<real*> grid_grad_view(const GridDef& def, GradBuffer& grads);

}  // namespace lantern
