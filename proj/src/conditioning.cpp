#include "lantern/conditioning.hpp"

#include <cmath>
#include <fstream>

namespace lantern {

std::array<double, 3> LandmarkFrame::centroid() const {
  std::array<double, 3> c = {0, 0, 0};
  for (const auto& p : points)
    for (int k = 0; k < 3; ++k) c[k] += p[k];
  const double n = points.empty() ? 1.0 : double(points.size());
  for (int k = 0; k < 3; ++k) c[k] /= n;
  return c;
}

void validate_landmarks(const LandmarkFrame& frame) {
  LANTERN_CHECK(!frame.points.empty(), "landmark frame ", frame.frame_index,
                " has no points");
  for (const auto& p : frame.points)
    for (int k = 0; k < 3; ++k) {
      LANTERN_CHECK(std::isfinite(p[k]) && p[k] >= 0.0 && p[k] <= 1.0,
                    "landmark frame ", frame.frame_index,
                    ": coordinate ", p[k], " outside [0,1]");
    }
}

void write_landmark_records(const std::string& path,
                            std::span<const LandmarkFrame> frames) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw EngineError(cat("cannot write landmark records: ", path));
  os.precision(17);
  for (const auto& f : frames) {
    os << f.frame_index;
    for (const auto& p : f.points) os << ' ' << p[0] << ' ' << p[1] << ' ' << p[2];
    os << '\n';
  }
  if (!os) throw EngineError(cat("landmark record write failed: ", path));
}

std::vector<LandmarkFrame> read_landmark_records(const std::string& path,
                                                 int expected_count) {
  std::ifstream is(path);
  if (!is) throw EngineError(cat("cannot open landmark records: ", path));
  std::vector<LandmarkFrame> frames;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    LandmarkFrame f;
    LANTERN_CHECK(static_cast<bool>(ls >> f.frame_index),
                  "landmark records '", path, "': bad frame index");
    double x, y, z;
    while (ls >> x >> y >> z) f.points.push_back({x, y, z});
    LANTERN_CHECK(!ls.fail() || ls.eof(), "landmark records '", path,
                  "': malformed coordinates in frame ", f.frame_index);
    validate_landmarks(f);
    if (expected_count >= 0)
      LANTERN_CHECK(f.count() == expected_count, "landmark records '", path,
                    "': inconsistent landmark count in frame ",
                    f.frame_index);
    frames.push_back(std::move(f));
  }
  return frames;
}

LevelMask schedule_mask(const ProgressiveSchedule& sched, std::uint64_t step) {
  LANTERN_CHECK(sched.initial_levels >= 0 && sched.step_interval > 0 &&
                    sched.total_levels >= 1,
                "progressive schedule: invalid parameters");
  const std::uint64_t grown = step / static_cast<std::uint64_t>(sched.step_interval);
  const std::uint64_t active =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(sched.total_levels),
                              sched.initial_levels + grown);
  return LevelMask{static_cast<int>(active)};
}

CondEncoderDef create_cond_encoder(ParamStore& store, const std::string& prefix,
                                   int landmarks, int window,
                                   const GridConfig& lm_cfg,
                                   const std::vector<int>& mlp_hidden,
                                   int d_cond, std::uint64_t seed,
                                   bool use_mlp) {
  LANTERN_CHECK(landmarks >= 1, "cond encoder: need at least one landmark");
  LANTERN_CHECK(window >= 1, "cond encoder: window must be >= 1");
  CondEncoderDef def;
  def.lm_grid = create_grid(lm_cfg, store, prefix + "/grid", seed);
  def.landmarks = landmarks;
  def.window = window;
  def.use_mlp = use_mlp;
  if (use_mlp) {
    LANTERN_CHECK(d_cond >= 1, "cond encoder: d_cond must be >= 1");
    def.d_cond = d_cond;
    std::vector<int> dims;
    dims.push_back(def.hhat_width());
    for (int h : mlp_hidden) dims.push_back(h);
    dims.push_back(d_cond);
    def.mlp = create_mlp(store, prefix + "/mlp", dims, seed);
  } else {
    def.d_cond = def.hhat_width();
  }
  return def;
}

std::vector<real> encode_landmarks(const CondEncoderDef& def,
                                   const ParamStore& store,
                                   std::span<const LandmarkFrame> frames,
                                   CondCache* cache) {
  LANTERN_CHECK(static_cast<int>(frames.size()) == def.window,
                "encode_landmarks: expected ", def.window, " frames, got ",
                frames.size());
  std::vector<double> points;
  points.reserve(static_cast<std::size_t>(def.window) * def.landmarks * 3);
  for (const auto& f : frames) {
    LANTERN_CHECK(f.count() == def.landmarks, "encode_landmarks: frame ",
                  f.frame_index, " has ", f.count(), " landmarks, expected ",
                  def.landmarks);
    for (const auto& p : f.points) {
      points.push_back(p[0]);
      points.push_back(p[1]);
      points.push_back(p[2]);
    }
  }
  const std::size_t n_points = points.size() / 3;
  std::vector<real> hhat(n_points * def.lm_grid.feature_width());
  auto tables = grid_table_view(def.lm_grid, store);
  grid_encode<real>(def.lm_grid, tables, points.data(), n_points,
                    LevelMask::full(def.lm_grid.cfg.levels), hhat.data());

  if (!def.use_mlp) {
    if (cache) {
      cache->points = points;
      cache->hhat = hhat;
    }
    return hhat;
  }
  LANTERN_CHECK(static_cast<int>(hhat.size()) == def.mlp.in,
                "encode_landmarks: encoder width ", hhat.size(),
                " does not match MLP input ", def.mlp.in);
  std::vector<real> h_cond(def.d_cond);
  if (cache) {
    cache->points = points;
    cache->hhat = hhat;
    mlp_forward(def.mlp, store, hhat.data(), 1, h_cond.data(),
                &cache->mlp_cache);
  } else {
    mlp_forward(def.mlp, store, hhat.data(), 1, h_cond.data(), nullptr);
  }
  return h_cond;
}

void cond_encoder_backward(const CondEncoderDef& def, const ParamStore& store,
                           const CondCache& cache,
                           std::span<const real> dh_cond, GradBuffer& grads) {
  LANTERN_CHECK(static_cast<int>(dh_cond.size()) == def.d_cond,
                "cond_encoder_backward: upstream width mismatch");
  std::vector<real> dhhat;
  if (def.use_mlp) {
    dhhat.assign(cache.hhat.size(), real(0));
    mlp_backward(def.mlp, store, cache.mlp_cache, cache.hhat.data(),
                 dh_cond.data(), dhhat.data(), grads);
  } else {
    dhhat.assign(dh_cond.begin(), dh_cond.end());
  }
  auto gview = grid_grad_view(def.lm_grid, grads);
  grid_encode_backward<real>(def.lm_grid, cache.points.data(),
                             cache.points.size() / 3,
                             LevelMask::full(def.lm_grid.cfg.levels),
                             dhhat.data(), std::span<real* const>(gview));
}

std::vector<real> affine_modulate_vec(std::span<const real> intermediate,
                                      std::span<const real> alpha,
                                      std::span<const real> beta) {
  LANTERN_CHECK(alpha.size() == intermediate.size() &&
                    beta.size() == intermediate.size(),
                "affine_modulate: width mismatch (", intermediate.size(), ", ",
                alpha.size(), ", ", beta.size(), ")");
  std::vector<real> out(intermediate.size());
  kernels::ops_f64().affine_modulate(intermediate.data(), alpha.data(),
                                     beta.data(), out.data(),
                                     intermediate.size());
  return out;
}

AffineBranchOut branch_params(const LinearDef& branch, const ParamStore& store,
                              std::span<const real> cond) {
  LANTERN_CHECK(static_cast<int>(cond.size()) == branch.in,
                "branch_params: cond width ", cond.size(),
                " does not match branch input ", branch.in);
  LANTERN_CHECK(branch.out % 2 == 0,
                "branch_params: branch output width must be even");
  std::vector<real> ab(branch.out);
  linear_forward(linear_view(branch, store), cond.data(), 1, ab.data());
  const int half = branch.out / 2;
  AffineBranchOut out;
  out.alpha.assign(ab.begin(), ab.begin() + half);
  out.beta.assign(ab.begin() + half, ab.end());
  return out;
}

}  // namespace lantern
