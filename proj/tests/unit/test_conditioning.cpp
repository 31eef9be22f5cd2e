#include <doctest.h>

#include <filesystem>

#include "lantern/conditioning.hpp"
#include "lantern/grad_check.hpp"
#include "support/test_helpers.hpp"

using namespace lantern;

TEST_CASE("schedule_mask: activation schedule and clamping") {
  const ProgressiveSchedule sched{4, 5000, 16};
  CHECK(schedule_mask(sched, 0).active_levels == 4);
  CHECK(schedule_mask(sched, 4999).active_levels == 4);
  CHECK(schedule_mask(sched, 5000).active_levels == 5);
  CHECK(schedule_mask(sched, 60000).active_levels == 16);
  // Nondecreasing and reaches the total in finite steps.
  int prev = 0;
  for (std::uint64_t s = 0; s <= 80000; s += 1000) {
    const int a = schedule_mask(sched, s).active_levels;
    CHECK(a >= prev);
    prev = a;
  }
  CHECK(prev == 16);
}

TEST_CASE("affine_modulate: identity, annihilation, direct evaluation") {
  const std::vector<real> inter = {1.0, 2.0};
  {
    const std::vector<real> zero = {0.0, 0.0};
    const auto out = affine_modulate_vec(inter, zero, zero);
    CHECK(out == inter);
  }
  {
    const std::vector<real> alpha = {0.0, 0.0};
    const std::vector<real> beta = {-1.0, -1.0};
    const auto out = affine_modulate_vec(inter, alpha, beta);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
  }
  {
    const std::vector<real> alpha = {0.5, 0.5};
    const std::vector<real> beta = {1.0, 0.0};
    const auto out = affine_modulate_vec(inter, alpha, beta);
    CHECK(out[0] == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(2.5).epsilon(1e-15));
  }
  const std::vector<real> bad = {1.0};
  CHECK_THROWS_AS(affine_modulate_vec(inter, bad, bad), ValidationError);
}

TEST_CASE("branch_params: zero map, bias at origin, gradient oracle") {
  ParamStore store;
  LinearDef branch = create_linear(store, "branch", 4, 6, 7, LinearInit::kZero);
  const std::vector<real> cond = {0.3, -0.2, 0.9, 0.1};

  auto out = branch_params(branch, store, cond);
  for (real v : out.alpha) CHECK(v == 0.0);
  for (real v : out.beta) CHECK(v == 0.0);

  // Bias split in halves at the origin, alpha first.
  auto bias = store.values(branch.b_handle);
  for (int i = 0; i < 6; ++i) bias[i] = 0.1 * (i + 1);
  const std::vector<real> zero_cond(4, 0.0);
  out = branch_params(branch, store, zero_cond);
  CHECK(out.alpha[0] == doctest::Approx(0.1));
  CHECK(out.alpha[1] == doctest::Approx(0.2));
  CHECK(out.alpha[2] == doctest::Approx(0.3));
  CHECK(out.beta[0] == doctest::Approx(0.4));
  CHECK(out.beta[2] == doctest::Approx(0.6));

  const std::vector<real> short_cond = {1.0};
  CHECK_THROWS_AS(branch_params(branch, store, short_cond), ValidationError);

  // Finite differences over branch weights: objective = dot(u, [alpha|beta]).
  Pcg32 rng(3, 9);
  for (auto& v : store.values(branch.w_handle)) v = rng.uniform(-1, 1);
  std::vector<real> u(6);
  for (auto& v : u) v = rng.uniform(-1, 1);
  GradBuffer grads(store);
  std::vector<real> dcond(4, 0.0);
  linear_backward(linear_view(branch, store), cond.data(), u.data(), 1,
                  dcond.data(), grads.grads(branch.w_handle).data(),
                  grads.grads(branch.b_handle).data());
  std::vector<double> point(store.values(branch.w_handle).begin(),
                            store.values(branch.w_handle).end());
  std::vector<double> analytic(grads.grads(branch.w_handle).begin(),
                               grads.grads(branch.w_handle).end());
  auto f = [&](std::span<const double> w) {
    ParamStore local = store;
    std::copy(w.begin(), w.end(), local.values(branch.w_handle).begin());
    const auto ab = branch_params(branch, local, cond);
    double acc = 0;
    for (int i = 0; i < 3; ++i) acc += u[i] * ab.alpha[i];
    for (int i = 0; i < 3; ++i) acc += u[3 + i] * ab.beta[i];
    return acc;
  };
  CHECK(gradient_check(f, point, analytic, 1e-3) <= 1e-4);

  // And over the conditional input itself.
  std::vector<double> cpoint(cond.begin(), cond.end());
  std::vector<double> canalytic(dcond.begin(), dcond.end());
  auto fc = [&](std::span<const double> c) {
    std::vector<real> cc(c.begin(), c.end());
    const auto ab = branch_params(branch, store, cc);
    double acc = 0;
    for (int i = 0; i < 3; ++i) acc += u[i] * ab.alpha[i];
    for (int i = 0; i < 3; ++i) acc += u[3 + i] * ab.beta[i];
    return acc;
  };
  CHECK(gradient_check(fc, cpoint, canalytic, 1e-3) <= 1e-4);
}

TEST_CASE("encode_landmarks: widths, determinism, order sensitivity") {
  // Table-style landmark encoder: 16 levels x 2 features, one landmark.
  ParamStore store;
  GridConfig lm;
  lm.levels = 16;
  lm.features_per_level = 2;
  lm.log2_table_size = 16;
  lm.base_resolution = 32;
  lm.max_resolution = 2048;
  CondEncoderDef enc =
      create_cond_encoder(store, "cond", 1, 1, lm, {32}, 8, 11);
  CHECK(enc.hhat_width() == 32);

  Pcg32 rng(5, 2);
  testing::randomize_store(store, rng, 0.3);
  LandmarkFrame f = testing::random_landmarks(rng, 1);
  CondCache cache;
  const auto a = encode_landmarks(enc, store, std::span(&f, 1), &cache);
  const auto b = encode_landmarks(enc, store, std::span(&f, 1));
  CHECK(a == b);
  CHECK(static_cast<int>(a.size()) == 8);
  CHECK(static_cast<int>(cache.hhat.size()) == 32);

  LandmarkFrame wrong = testing::random_landmarks(rng, 2);
  CHECK_THROWS_AS(encode_landmarks(enc, store, std::span(&wrong, 1)),
                  ValidationError);
}

TEST_CASE("encode_landmarks: swapping distinct landmarks permutes hhat") {
  ParamStore store;
  GridConfig lm;
  lm.levels = 2;
  lm.features_per_level = 2;
  lm.log2_table_size = 10;
  lm.base_resolution = 2;
  lm.max_resolution = 4;
  CondEncoderDef enc =
      create_cond_encoder(store, "cond", 2, 1, lm, {8}, 4, 13);
  Pcg32 rng(17, 1);
  testing::randomize_store(store, rng, 0.5);

  LandmarkFrame f = testing::random_landmarks(rng, 2);
  CondCache ca, cb;
  encode_landmarks(enc, store, std::span(&f, 1), &ca);
  LandmarkFrame swapped = f;
  std::swap(swapped.points[0], swapped.points[1]);
  encode_landmarks(enc, store, std::span(&swapped, 1), &cb);

  const int w = enc.lm_grid.feature_width();
  for (int i = 0; i < w; ++i) {
    CHECK(ca.hhat[i] == cb.hhat[w + i]);
    CHECK(ca.hhat[w + i] == cb.hhat[i]);
  }
  CHECK(ca.hhat != cb.hhat);  // the two encodings differ for distinct points
}

TEST_CASE("cond encoder backward: finite-difference oracle") {
  ParamStore store;
  GridConfig lm;
  lm.levels = 2;
  lm.features_per_level = 2;
  lm.log2_table_size = 8;
  lm.base_resolution = 2;
  lm.max_resolution = 4;
  CondEncoderDef enc = create_cond_encoder(store, "cond", 2, 1, lm, {8}, 4, 19);
  Pcg32 rng(23, 4);
  testing::randomize_store(store, rng, 0.5);
  LandmarkFrame f = testing::random_landmarks(rng, 2);

  CondCache cache;
  const auto h = encode_landmarks(enc, store, std::span(&f, 1), &cache);
  std::vector<real> up(h.size());
  for (auto& v : up) v = rng.uniform(-1, 1);
  GradBuffer grads(store);
  cond_encoder_backward(enc, store, cache, up, grads);

  // Check grid entries of level 0 and the first MLP weight matrix.
  for (std::size_t handle :
       {enc.lm_grid.handles[0], enc.mlp.layers[0].w_handle}) {
    std::vector<double> point(store.values(handle).begin(),
                              store.values(handle).end());
    std::vector<double> analytic(grads.grads(handle).begin(),
                                 grads.grads(handle).end());
    auto fobj = [&](std::span<const double> xs) {
      ParamStore local = store;
      std::copy(xs.begin(), xs.end(), local.values(handle).begin());
      const auto hc = encode_landmarks(enc, local, std::span(&f, 1));
      double acc = 0;
      for (std::size_t i = 0; i < hc.size(); ++i) acc += up[i] * hc[i];
      return acc;
    };
    CHECK(gradient_check(fobj, point, analytic, 1e-3) <= 1e-4);
  }
}

TEST_CASE("landmark records: text round trip and validation") {
  namespace fs = std::filesystem;
  const auto dir = testing::fresh_temp_dir("lmrec");
  Pcg32 rng(31, 7);
  std::vector<LandmarkFrame> frames;
  for (int i = 0; i < 4; ++i) {
    auto f = testing::random_landmarks(rng, 3);
    f.frame_index = i;
    frames.push_back(f);
  }
  const std::string path = (dir / "landmarks.txt").string();
  write_landmark_records(path, frames);
  const auto loaded = read_landmark_records(path, 3);
  REQUIRE(loaded.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(loaded[i].frame_index == frames[i].frame_index);
    CHECK(loaded[i].points == frames[i].points);  // lossless decimals
  }
  CHECK_THROWS_AS(read_landmark_records(path, 5), ValidationError);
}

TEST_CASE("raw-hhat conditioning route skips the MLP") {
  ParamStore store;
  GridConfig lm;
  lm.levels = 2;
  lm.features_per_level = 2;
  lm.log2_table_size = 8;
  lm.base_resolution = 2;
  lm.max_resolution = 4;
  CondEncoderDef enc =
      create_cond_encoder(store, "cond", 2, 1, lm, {}, 0, 3, false);
  CHECK(enc.d_cond == enc.hhat_width());
  Pcg32 rng(41, 3);
  testing::randomize_store(store, rng, 0.5);
  LandmarkFrame f = testing::random_landmarks(rng, 2);
  CondCache cache;
  const auto h = encode_landmarks(enc, store, std::span(&f, 1), &cache);
  CHECK(h == cache.hhat);
}
