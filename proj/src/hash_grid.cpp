#include "lantern/hash_grid.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

namespace lantern {
namespace {

constexpr std::uint32_t kHashPrimes[3] = {1u, 2654435761u, 805459861u};

std::atomic<std::uint64_t> g_clamp_warnings{0};

void note_clamp() {
  if (g_clamp_warnings.fetch_add(1, std::memory_order_relaxed) == 0)
    std::fprintf(stderr,
                 "lantern: warning: grid query outside [0,1] by <= 1e-6, "
                 "clamped (reported once)\n");
}

void validate_config(const GridConfig& cfg) {
  LANTERN_CHECK(cfg.levels >= 1, "grid: levels must be >= 1");
  LANTERN_CHECK(cfg.features_per_level >= 1, "grid: features_per_level must be >= 1");
  LANTERN_CHECK(cfg.base_resolution >= 1 &&
                    cfg.max_resolution >= cfg.base_resolution,
                "grid: need max_resolution >= base_resolution >= 1");
  LANTERN_CHECK(cfg.input_dim == 2 || cfg.input_dim == 3,
                "grid: input_dim must be 2 or 3");
  LANTERN_CHECK(cfg.log2_table_size >= 1 && cfg.log2_table_size <= 30,
                "grid: log2_table_size out of range");
}

// Cell index and interpolation offset for one point at one resolution.
// pos in [0, N]; the cell is clamped to N-1 so p == 1 interpolates the last
// corner with weight 1 (vertex exactness at the far face).
inline void locate(double p, int n, int& cell, double& frac) {
  const double pos = p * n;
  int c = static_cast<int>(pos);
  if (c > n - 1) c = n - 1;
  if (c < 0) c = 0;
  cell = c;
  frac = pos - c;
}

}  // namespace

double grid_growth_factor(const GridConfig& cfg) {
  if (cfg.levels <= 1) return 1.0;
  return std::exp((std::log(static_cast<double>(cfg.max_resolution)) -
                   std::log(static_cast<double>(cfg.base_resolution))) /
                  (cfg.levels - 1));
}

int level_resolution(const GridConfig& cfg, int level) {
  LANTERN_CHECK(level >= 0 && level < cfg.levels, "grid: level ", level,
                " out of range [0, ", cfg.levels, ")");
  if (level == 0) return cfg.base_resolution;
  if (level == cfg.levels - 1) return cfg.max_resolution;
  const double b = grid_growth_factor(cfg);
  // The 1e-9 guard absorbs rounding when b^l lands on an exact integer.
  const int n = static_cast<int>(
      std::floor(cfg.base_resolution * std::pow(b, level) + 1e-9));
  return std::max(n, level_resolution(cfg, level - 1));
}

std::size_t GridDef::total_rows() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.rows;
  return n;
}

GridDef plan_grid(const GridConfig& cfg) {
  validate_config(cfg);
  GridDef def;
  def.cfg = cfg;
  const std::size_t table_rows = std::size_t(1) << cfg.log2_table_size;
  for (int l = 0; l < cfg.levels; ++l) {
    GridLevelLayout lvl;
    lvl.resolution = level_resolution(cfg, l);
    std::size_t dense_rows = 1;
    for (int d = 0; d < cfg.input_dim; ++d)
      dense_rows *= static_cast<std::size_t>(lvl.resolution) + 1;
    lvl.dense = dense_rows <= table_rows;
    lvl.rows = lvl.dense ? dense_rows : table_rows;
    def.levels.push_back(lvl);
  }
  return def;
}

GridDef create_grid(const GridConfig& cfg, ParamStore& store,
                    const std::string& prefix, std::uint64_t seed) {
  GridDef def = plan_grid(cfg);
  for (int l = 0; l < cfg.levels; ++l) {
    std::string name = cat(prefix, "/l", l < 10 ? "0" : "", l);
    const std::size_t h =
        store.add(name, {def.levels[l].rows,
                         static_cast<std::size_t>(cfg.features_per_level)},
                  LrGroup::kGridEntries, false);
    Pcg32 rng(seed, rng_stream(0x6c67726964ULL, std::hash<std::string>{}(name)));
    for (real& v : store.values(h)) v = real(rng.uniform(-1e-4, 1e-4));
    def.handles.push_back(h);
  }
  return def;
}

std::uint32_t hash_index(std::span<const int> cell, const GridLevelLayout& lvl,
                         const GridConfig& cfg) {
  LANTERN_CHECK(static_cast<int>(cell.size()) == cfg.input_dim,
                "hash_index: cell rank mismatch");
  for (int d = 0; d < cfg.input_dim; ++d)
    LANTERN_CHECK(cell[d] >= 0 && cell[d] <= lvl.resolution,
                  "hash_index: coordinate ", cell[d], " outside [0, ",
                  lvl.resolution, "]");
  if (lvl.dense) {
    std::uint32_t idx = 0;
    for (int d = 0; d < cfg.input_dim; ++d)
      idx = idx * static_cast<std::uint32_t>(lvl.resolution + 1) +
            static_cast<std::uint32_t>(cell[d]);
    return idx;
  }
  std::uint32_t h = 0;
  for (int d = 0; d < cfg.input_dim; ++d)
    h ^= static_cast<std::uint32_t>(cell[d]) * kHashPrimes[d];
  return h & (static_cast<std::uint32_t>(lvl.rows) - 1u);
}

std::uint64_t grid_clamp_warnings() {
  return g_clamp_warnings.load(std::memory_order_relaxed);
}

namespace {

// Shared corner walk for forward and backward. Emits (row, weight) pairs
// for the 2^d corners of the cell that contains p at this level.
struct CornerSet {
  std::uint32_t rows[8];
  double weights[8];
  int count;
};

inline void gather_corners(const double* p, const GridLevelLayout& lvl,
                           const GridConfig& cfg, CornerSet& out) {
  const int d = cfg.input_dim;
  int cell[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (int k = 0; k < d; ++k) locate(p[k], lvl.resolution, cell[k], frac[k]);
  const int corners = 1 << d;
  out.count = corners;
  const std::uint32_t n1 = static_cast<std::uint32_t>(lvl.resolution) + 1;
  for (int m = 0; m < corners; ++m) {
    double w = 1.0;
    std::uint32_t idx = 0;
    std::uint32_t h = 0;
    for (int k = 0; k < d; ++k) {
      const int bit = (m >> k) & 1;
      const std::uint32_t c = static_cast<std::uint32_t>(cell[k] + bit);
      w *= bit ? frac[k] : 1.0 - frac[k];
      if (lvl.dense)
        idx = idx * n1 + c;
      else
        h ^= c * kHashPrimes[k];
    }
    out.rows[m] = lvl.dense ? idx : (h & (static_cast<std::uint32_t>(lvl.rows) - 1u));
    out.weights[m] = w;
  }
}

inline void check_point(const double* p, int dim, double* clamped) {
  for (int k = 0; k < dim; ++k) {
    const double v = p[k];
    if (!std::isfinite(v))
      throw EngineError("grid_encode: non-finite query coordinate");
    if (v < 0.0 || v > 1.0) {
      LANTERN_CHECK(v >= -1e-6 && v <= 1.0 + 1e-6,
                    "grid_encode: coordinate ", v, " outside [0,1] tolerance");
      note_clamp();
      clamped[k] = v < 0.0 ? 0.0 : 1.0;
    } else {
      clamped[k] = v;
    }
  }
}

}  // namespace

template <class T>
void grid_encode(const GridDef& def, std::span<const T* const> tables,
                 const double* points, std::size_t count,
                 const LevelMask& mask, T* out) {
  LANTERN_CHECK(tables.size() == def.levels.size(),
                "grid_encode: table view size mismatch");
  LANTERN_CHECK(mask.active_levels >= 0 && mask.active_levels <= def.cfg.levels,
                "grid_encode: mask out of range");
  const int dim = def.cfg.input_dim;
  const int F = def.cfg.features_per_level;
  const int width = def.feature_width();
  const int active = mask.active_levels;
  CornerSet cs;
  for (std::size_t i = 0; i < count; ++i) {
    double p[3];
    check_point(points + i * dim, dim, p);
    T* row = out + i * width;
    for (int l = 0; l < active; ++l) {
      gather_corners(p, def.levels[l], def.cfg, cs);
      const T* table = tables[l];
      T* dst = row + l * F;
      for (int f = 0; f < F; ++f) dst[f] = T(0);
      for (int m = 0; m < cs.count; ++m) {
        const T w = static_cast<T>(cs.weights[m]);
        const T* src = table + static_cast<std::size_t>(cs.rows[m]) * F;
        for (int f = 0; f < F; ++f) dst[f] += w * src[f];
      }
    }
    for (int k = active * F; k < width; ++k) row[k] = T(0);
  }
}

template <class T>
void grid_encode_backward(const GridDef& def, const double* points,
                          std::size_t count, const LevelMask& mask,
                          const T* upstream, std::span<T* const> table_grads) {
  LANTERN_CHECK(table_grads.size() == def.levels.size(),
                "grid_encode_backward: gradient view size mismatch");
  LANTERN_CHECK(mask.active_levels >= 0 && mask.active_levels <= def.cfg.levels,
                "grid_encode_backward: mask out of range");
  const int dim = def.cfg.input_dim;
  const int F = def.cfg.features_per_level;
  const int width = def.feature_width();
  const int active = mask.active_levels;
  CornerSet cs;
  for (std::size_t i = 0; i < count; ++i) {
    double p[3];
    check_point(points + i * dim, dim, p);
    const T* up = upstream + i * width;
    for (int l = 0; l < active; ++l) {
      gather_corners(p, def.levels[l], def.cfg, cs);
      T* gtable = table_grads[l];
      const T* src = up + l * F;
      for (int m = 0; m < cs.count; ++m) {
        const T w = static_cast<T>(cs.weights[m]);
        T* dst = gtable + static_cast<std::size_t>(cs.rows[m]) * F;
        for (int f = 0; f < F; ++f) dst[f] += w * src[f];
      }
    }
  }
}

template void grid_encode<double>(const GridDef&, std::span<const double* const>,
                                  const double*, std::size_t, const LevelMask&,
                                  double*);
template void grid_encode<float>(const GridDef&, std::span<const float* const>,
                                 const double*, std::size_t, const LevelMask&,
                                 float*);
template void grid_encode_backward<double>(const GridDef&, const double*,
                                           std::size_t, const LevelMask&,
                                           const double*,
                                           std::span<double* const>);
template void grid_encode_backward<float>(const GridDef&, const double*,
                                          std::size_t, const LevelMask&,
                                          const float*,
                                          std::span<float* const>);

std::vector<const real*> grid_table_view(const GridDef& def,
                                         const ParamStore& store) {
  std::vector<const real*> v;
  v.reserve(def.handles.size());
  for (std::size_t h : def.handles) v.push_back(store.values(h).data());
  return v;
}

std::vector<real*> grid_grad_view(const GridDef& def, GradBuffer& grads) {
  std::vector<real*> v;
  v.reserve(def.handles.size());
  for (std::size_t h : def.handles) v.push_back(grads.grads(h).data());
  return v;
}

std::vector<real> grid_encode_point(const GridDef& def, const ParamStore& store,
                                    std::span<const double> p,
                                    const LevelMask& mask) {
  LANTERN_CHECK(static_cast<int>(p.size()) == def.cfg.input_dim,
                "grid_encode_point: dimension mismatch");
  std::vector<real> out(def.feature_width());
  auto tables = grid_table_view(def, store);
  grid_encode<real>(def, tables, p.data(), 1, mask, out.data());
  return out;
}

}  // namespace lantern
