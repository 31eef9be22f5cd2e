#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lantern/grad_check.hpp"
#include "lantern/hash_grid.hpp"
#include "lantern/rng.hpp"

using namespace lantern;

namespace {

GridConfig paper_positional() {
  GridConfig cfg;
  cfg.levels = 16;
  cfg.features_per_level = 4;
  cfg.log2_table_size = 16;
  cfg.base_resolution = 32;
  cfg.max_resolution = 2048;
  cfg.input_dim = 3;
  return cfg;
}

GridConfig tiny_grid(int levels = 3, int f = 2, int base = 2, int maxres = 8) {
  GridConfig cfg;
  cfg.levels = levels;
  cfg.features_per_level = f;
  cfg.log2_table_size = 10;
  cfg.base_resolution = base;
  cfg.max_resolution = maxres;
  cfg.input_dim = 3;
  return cfg;
}

}  // namespace

TEST_CASE("level_resolution: endpoint and geometric interior values") {
  const GridConfig cfg = paper_positional();
  CHECK(level_resolution(cfg, 0) == 32);
  CHECK(level_resolution(cfg, 15) == 2048);
  const double b = std::pow(64.0, 1.0 / 15.0);
  CHECK(level_resolution(cfg, 1) == static_cast<int>(std::floor(32.0 * b)));
  for (int l = 1; l < cfg.levels; ++l)
    CHECK(level_resolution(cfg, l) >= level_resolution(cfg, l - 1));
  CHECK_THROWS_AS(level_resolution(cfg, 16), ValidationError);
  CHECK_THROWS_AS(level_resolution(cfg, -1), ValidationError);
}

TEST_CASE("plan_grid: dense/hashed switching at the table size boundary") {
  const GridDef def = plan_grid(paper_positional());
  const std::size_t T = 1u << 16;
  for (const auto& lvl : def.levels) {
    const std::size_t dense_rows =
        static_cast<std::size_t>(lvl.resolution + 1) * (lvl.resolution + 1) *
        (lvl.resolution + 1);
    CHECK(lvl.dense == (dense_rows <= T));
    CHECK(lvl.rows == (lvl.dense ? dense_rows : T));
  }
  // 33^3 = 35937 <= 2^16, 43^3 > 2^16: exactly the first level is dense.
  CHECK(def.levels[0].dense);
  CHECK_FALSE(def.levels[1].dense);
}

TEST_CASE("hash_index: dense row-major origin and hashed XOR formula") {
  const GridDef def = plan_grid(paper_positional());
  const int zero[3] = {0, 0, 0};
  CHECK(hash_index(std::span(zero, 3), def.levels[0], def.cfg) == 0);
  CHECK(hash_index(std::span(zero, 3), def.levels[5], def.cfg) == 0);

  // Independent scalar evaluation of the XOR-prime formula.
  const int cell[3] = {1, 2, 3};
  const std::uint32_t expected =
      (1u * 1u ^ 2u * 2654435761u ^ 3u * 805459861u) & ((1u << 16) - 1u);
  CHECK(hash_index(std::span(cell, 3), def.levels[5], def.cfg) == expected);

  const int bad[3] = {0, 0, def.levels[0].resolution + 1};
  CHECK_THROWS_AS(hash_index(std::span(bad, 3), def.levels[0], def.cfg),
                  ValidationError);
}

TEST_CASE("encode: vertex exactness at every level") {
  ParamStore store;
  GridDef def = create_grid(tiny_grid(4, 2, 2, 16), store, "g", 7);
  Pcg32 rng(11, 0);
  for (std::size_t h : def.handles)
    for (auto& v : store.values(h)) v = rng.uniform(-1, 1);

  const LevelMask full = LevelMask::full(def.cfg.levels);
  for (int l = 0; l < def.cfg.levels; ++l) {
    const int n = def.levels[l].resolution;
    // A vertex with all coordinates strictly inside (0,1).
    const int vx = 1 % (n + 1), vy = n / 2, vz = n;
    const double p[3] = {double(vx) / n, double(vy) / n, double(vz) / n};
    auto feat = grid_encode_point(def, store, std::span(p, 3), full);
    const int cell[3] = {vx, vy, vz};
    const std::uint32_t row =
        hash_index(std::span(cell, 3), def.levels[l], def.cfg);
    const auto table = store.values(def.handles[l]);
    for (int f = 0; f < def.cfg.features_per_level; ++f) {
      CHECK(std::abs(feat[l * def.cfg.features_per_level + f] -
                     table[row * def.cfg.features_per_level + f]) <= 1e-12);
    }
  }
}

TEST_CASE("encode: partition of unity via constant tables") {
  ParamStore store;
  GridDef def = create_grid(tiny_grid(), store, "g", 1);
  for (std::size_t h : def.handles)
    for (auto& v : store.values(h)) v = 1.0;
  Pcg32 rng(3, 5);
  const LevelMask full = LevelMask::full(def.cfg.levels);
  for (int trial = 0; trial < 200; ++trial) {
    const double p[3] = {rng.next_double(), rng.next_double(),
                         rng.next_double()};
    auto feat = grid_encode_point(def, store, std::span(p, 3), full);
    for (double f : feat) CHECK(std::abs(f - 1.0) <= 1e-12);
  }
}

TEST_CASE("encode: masked levels emit zero features and zero gradients") {
  ParamStore store;
  GridDef def = create_grid(tiny_grid(4, 2, 2, 16), store, "g", 2);
  Pcg32 rng(9, 1);
  for (std::size_t h : def.handles)
    for (auto& v : store.values(h)) v = rng.uniform(-1, 1);

  const LevelMask mask{2};
  const double p[3] = {0.31, 0.77, 0.12};
  auto feat = grid_encode_point(def, store, std::span(p, 3), mask);
  const int F = def.cfg.features_per_level;
  for (int k = 2 * F; k < def.feature_width(); ++k) CHECK(feat[k] == 0.0);

  GradBuffer grads(store);
  std::vector<real> upstream(def.feature_width(), 1.0);
  auto gview = grid_grad_view(def, grads);
  grid_encode_backward<real>(def, p, 1, mask, upstream.data(),
                             std::span<real* const>(gview));
  for (int l = 2; l < def.cfg.levels; ++l)
    for (real g : grads.grads(def.handles[l])) CHECK(g == 0.0);
  // Active levels did receive gradient mass.
  double mass = 0;
  for (real g : grads.grads(def.handles[0])) mass += std::abs(g);
  CHECK(mass > 0.9);
}

TEST_CASE("encode: clamp tolerance band and hard error beyond") {
  ParamStore store;
  GridDef def = create_grid(tiny_grid(), store, "g", 3);
  const LevelMask full = LevelMask::full(def.cfg.levels);
  const double near[3] = {-0.5e-6, 0.5, 1.0 + 0.5e-6};
  CHECK_NOTHROW(grid_encode_point(def, store, std::span(near, 3), full));
  const double far[3] = {-1e-3, 0.5, 0.5};
  CHECK_THROWS_AS(grid_encode_point(def, store, std::span(far, 3), full),
                  ValidationError);
  const double nan_p[3] = {std::nan(""), 0.5, 0.5};
  CHECK_THROWS_AS(grid_encode_point(def, store, std::span(nan_p, 3), full),
                  EngineError);
}

TEST_CASE("encode_backward: weight concentration and equal-split center") {
  ParamStore store;
  GridConfig cfg = tiny_grid(1, 2, 4, 4);
  GridDef def = create_grid(cfg, store, "g", 4);
  const LevelMask full = LevelMask::full(1);

  // On a vertex: the full upstream lands on that single entry.
  {
    GradBuffer grads(store);
    const double p[3] = {0.25, 0.5, 0.75};
    const real upstream[2] = {2.0, -3.0};
    auto gview = grid_grad_view(def, grads);
    grid_encode_backward<real>(def, p, 1, full, upstream,
                               std::span<real* const>(gview));
    const int cell[3] = {1, 2, 3};
    const auto row = hash_index(std::span(cell, 3), def.levels[0], def.cfg);
    const auto g = grads.grads(def.handles[0]);
    double total = 0;
    for (real v : g) total += std::abs(v);
    CHECK(g[row * 2 + 0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g[row * 2 + 1] == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(total == doctest::Approx(5.0).epsilon(1e-12));
  }

  // Center of a cell: each of the 8 corners receives upstream / 8.
  {
    GradBuffer grads(store);
    const double p[3] = {0.125, 0.125, 0.125};
    const real upstream[2] = {8.0, 16.0};
    auto gview = grid_grad_view(def, grads);
    grid_encode_backward<real>(def, p, 1, full, upstream,
                               std::span<real* const>(gview));
    const auto g = grads.grads(def.handles[0]);
    int touched = 0;
    for (std::size_t r = 0; r < def.levels[0].rows; ++r) {
      if (g[r * 2] != 0.0) {
        ++touched;
        CHECK(g[r * 2 + 0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g[r * 2 + 1] == doctest::Approx(2.0).epsilon(1e-12));
      }
    }
    CHECK(touched == 8);
  }
}

TEST_CASE("encode_backward: finite-difference oracle over table entries") {
  ParamStore store;
  GridDef def = create_grid(tiny_grid(2, 2, 2, 4), store, "g", 5);
  Pcg32 rng(21, 2);
  for (std::size_t h : def.handles)
    for (auto& v : store.values(h)) v = rng.uniform(-1, 1);
  const LevelMask full = LevelMask::full(def.cfg.levels);

  for (int trial = 0; trial < 20; ++trial) {
    const double p[3] = {rng.next_double(), rng.next_double(),
                         rng.next_double()};
    std::vector<real> upstream(def.feature_width());
    for (auto& u : upstream) u = rng.uniform(-1, 1);

    GradBuffer grads(store);
    auto gview = grid_grad_view(def, grads);
    grid_encode_backward<real>(def, p, 1, full, upstream.data(),
                               std::span<real* const>(gview));

    // Scalar objective: dot(upstream, encode(p)) as a function of level-0
    // table entries.
    const std::size_t h0 = def.handles[0];
    std::vector<double> point(store.values(h0).begin(),
                              store.values(h0).end());
    std::vector<double> analytic(grads.grads(h0).begin(),
                                 grads.grads(h0).end());
    auto f = [&](std::span<const double> entries) {
      ParamStore local = store;
      std::copy(entries.begin(), entries.end(), local.values(h0).begin());
      auto feat = grid_encode_point(def, local, std::span(p, 3), full);
      double acc = 0;
      for (std::size_t i = 0; i < feat.size(); ++i)
        acc += upstream[i] * feat[i];
      return acc;
    };
    CHECK(gradient_check(f, point, analytic, 1e-3) <= 1e-4);
  }
}

TEST_CASE("encode: empirical continuity bound") {
  ParamStore store;
  GridDef def = create_grid(tiny_grid(3, 2, 2, 8), store, "g", 6);
  Pcg32 rng(31, 4);
  double max_entry = 0;
  for (std::size_t h : def.handles)
    for (auto& v : store.values(h)) {
      v = rng.uniform(-1, 1);
      max_entry = std::max(max_entry, std::abs(double(v)));
    }
  const LevelMask full = LevelMask::full(def.cfg.levels);
  const double eps = 1e-4;
  const double bound = max_entry * def.cfg.max_resolution * 3 * eps;
  for (int trial = 0; trial < 100; ++trial) {
    double p[3], q[3];
    for (int k = 0; k < 3; ++k) {
      p[k] = rng.uniform(0.01, 0.99);
      q[k] = p[k] + eps / std::sqrt(3.0) * (rng.next_double() < 0.5 ? -1 : 1);
    }
    auto a = grid_encode_point(def, store, std::span(p, 3), full);
    auto b = grid_encode_point(def, store, std::span(q, 3), full);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(std::abs(a[i] - b[i]) <= bound);
  }
}
