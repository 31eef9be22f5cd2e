#include "lantern/occupancy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace lantern {

OccupancyGrid::OccupancyGrid(int res, double thresh, double gamma) {
  LANTERN_CHECK(res >= 1 && res <= 512, "occupancy: resolution out of range");
  LANTERN_CHECK(thresh >= 0, "occupancy: threshold must be >= 0");
  LANTERN_CHECK(gamma >= 0 && gamma <= 1, "occupancy: decay must be in [0,1]");
  resolution = res;
  threshold = thresh;
  decay = gamma;
  values.assign(static_cast<std::size_t>(res) * res * res, 0.0);
}

bool OccupancyGrid::occupied_at(const double p[3]) const {
  int c[3];
  for (int k = 0; k < 3; ++k) {
    int idx = static_cast<int>(p[k] * resolution);
    if (idx < 0) idx = 0;
    if (idx > resolution - 1) idx = resolution - 1;
    c[k] = idx;
  }
  return occupied_cell(cell_index(c[0], c[1], c[2]));
}

std::size_t OccupancyGrid::occupied_count() const {
  std::size_t n = 0;
  for (double v : values)
    if (v > threshold) ++n;
  return n;
}

void update_occupancy(OccupancyGrid& occ,
                      std::span<const FieldEval* const> conditions,
                      Pcg32& rng) {
  LANTERN_CHECK(!conditions.empty(),
                "update_occupancy: need at least one condition");
  const int res = occ.resolution;
  const std::size_t cells = occ.cell_count();
  const double inv = 1.0 / res;

  std::vector<double> best(cells, 0.0);
  std::vector<double> pts(cells * 3);
  std::vector<double> sigma(cells);
  for (const FieldEval* cond : conditions) {
    std::size_t i = 0;
    for (int x = 0; x < res; ++x)
      for (int y = 0; y < res; ++y)
        for (int z = 0; z < res; ++z, ++i) {
          pts[i * 3 + 0] = (x + rng.next_double()) * inv;
          pts[i * 3 + 1] = (y + rng.next_double()) * inv;
          pts[i * 3 + 2] = (z + rng.next_double()) * inv;
        }
    cond->eval_sigma(pts.data(), cells, sigma.data());
    for (std::size_t c = 0; c < cells; ++c)
      best[c] = std::max(best[c], sigma[c]);
  }
  for (std::size_t c = 0; c < cells; ++c)
    occ.values[c] = std::max(occ.decay * occ.values[c], best[c]);
}

namespace {
constexpr char kOccMagic[4] = {'R', '2', 'O', 'C'};
static_assert(std::endian::native == std::endian::little);
}  // namespace

void save_occupancy(const OccupancyGrid& occ, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw EngineError(cat("cannot write occupancy: ", path));
  os.write(kOccMagic, 4);
  const std::uint32_t res = occ.resolution;
  os.write(reinterpret_cast<const char*>(&res), 4);
  os.write(reinterpret_cast<const char*>(&occ.threshold), 8);
  os.write(reinterpret_cast<const char*>(&occ.decay), 8);
  os.write(reinterpret_cast<const char*>(occ.values.data()),
           static_cast<std::streamsize>(occ.values.size() * 8));
  if (!os) throw EngineError(cat("occupancy write failed: ", path));
}

OccupancyGrid load_occupancy(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw EngineError(cat("cannot open occupancy: ", path));
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kOccMagic, 4) != 0)
    throw ValidationError(cat("occupancy '", path, "': bad magic"));
  std::uint32_t res = 0;
  is.read(reinterpret_cast<char*>(&res), 4);
  double thresh = 0, gamma = 0;
  is.read(reinterpret_cast<char*>(&thresh), 8);
  is.read(reinterpret_cast<char*>(&gamma), 8);
  OccupancyGrid occ(static_cast<int>(res), thresh, gamma);
  is.read(reinterpret_cast<char*>(occ.values.data()),
          static_cast<std::streamsize>(occ.values.size() * 8));
  if (!is) throw EngineError(cat("occupancy '", path, "': truncated"));
  return occ;
}

}  // namespace lantern
