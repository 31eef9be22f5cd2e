#include <doctest.h>

#include <cmath>

#include "lantern/field.hpp"
#include "lantern/grad_check.hpp"
#include "support/test_helpers.hpp"

using namespace lantern;
namespace lt = lantern::testing;

TEST_CASE("dir_encode: analytic band values and parity") {
  const double z_axis[3] = {0, 0, 1};
  const auto sh = dir_encode(z_axis);
  CHECK(sh[0] == doctest::Approx(0.28209479177387814).epsilon(1e-12));
  CHECK(sh[2] == doctest::Approx(0.4886025119029199).epsilon(1e-12));

  Pcg32 rng(2, 8);
  for (int t = 0; t < 20; ++t) {
    const auto d = lt::random_unit_dir(rng);
    const double neg[3] = {-d[0], -d[1], -d[2]};
    const auto a = dir_encode(d.data());
    const auto b = dir_encode(neg);
    CHECK(a[0] == b[0]);  // degree 0 even
    for (int i = 1; i <= 3; ++i)
      CHECK(a[i] == doctest::Approx(-b[i]).epsilon(1e-12));  // degree 1 odd
  }
  const double bad[3] = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(dir_encode(bad), ValidationError);
}

TEST_CASE("density_activation: exp with clamping and exact derivative") {
  CHECK(density_activation(0.0) == 1.0);
  CHECK(density_activation(-15.0) == doctest::Approx(std::exp(-15.0)));
  CHECK(density_activation(-1000.0) == doctest::Approx(std::exp(-15.0)));
  CHECK(density_activation(1000.0) == doctest::Approx(std::exp(15.0)));

  const double p[1] = {1.0};
  const double g[1] = {density_activation_grad(1.0)};
  CHECK(g[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  auto f = [](std::span<const double> x) { return density_activation(x[0]); };
  CHECK(gradient_check(f, std::span(p, 1), std::span(g, 1), 1e-3) <= 1e-4);
}

namespace {

struct FieldFixture {
  ParamStore store;
  FieldDef def;
  LandmarkFrame lm;
  LevelMask mask;

  explicit FieldFixture(Variant variant, std::uint64_t seed = 77,
                        bool randomize = true, bool modulate_color = false) {
    def = create_field(lt::small_field_config(variant, modulate_color), store,
                       seed);
    Pcg32 rng(seed, 123);
    if (randomize) lt::randomize_store(store, rng, 0.4);
    lm = lt::random_landmarks(rng, 3);
    mask = LevelMask::full(def.pos_grid.cfg.levels);
  }

  FieldOutput eval(const double x[3], const double d[3]) {
    FrameContext ctx;
    const FrameContext* ctx_ptr = nullptr;
    if (def.conditioned()) {
      std::vector<LandmarkFrame> window(def.cond->window, lm);
      ctx = make_frame_context(def, store, window);
      ctx_ptr = &ctx;
    }
    return eval_field(def, store, x, d, ctx_ptr, mask);
  }
};

}  // namespace

TEST_CASE("eval_field: activation ranges and purity") {
  FieldFixture fx(Variant::kMaglo);
  Pcg32 rng(9, 4);
  for (int t = 0; t < 50; ++t) {
    const double x[3] = {rng.next_double(), rng.next_double(),
                         rng.next_double()};
    const auto d = lt::random_unit_dir(rng);
    const auto out = fx.eval(x, d.data());
    CHECK(out.sigma >= 0.0);
    for (double c : out.rgb) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
    }
    const auto again = fx.eval(x, d.data());
    CHECK(out.sigma == again.sigma);
    CHECK(out.rgb == again.rgb);
  }
}

TEST_CASE("maglo at zero-initialized branches equals the unconditioned field") {
  // Same seed => identical grid/net initializations entry by entry; the
  // conditioned model only adds zero-initialized branches and the encoder.
  FieldFixture cond_fx(Variant::kMaglo, 91, /*randomize=*/false);
  FieldFixture plain_fx(Variant::kUnconditioned, 91, /*randomize=*/false);

  Pcg32 rng(14, 5);
  double max_diff = 0;
  for (int t = 0; t < 200; ++t) {
    const double x[3] = {rng.next_double(), rng.next_double(),
                         rng.next_double()};
    const auto d = lt::random_unit_dir(rng);
    cond_fx.lm = lt::random_landmarks(rng, 3);
    const auto a = cond_fx.eval(x, d.data());
    const auto b = plain_fx.eval(x, d.data());
    max_diff = std::max(max_diff, std::abs(a.sigma - b.sigma));
    for (int c = 0; c < 3; ++c)
      max_diff = std::max(max_diff, std::abs(a.rgb[c] - b.rgb[c]));
  }
  CHECK(max_diff <= 1e-12);
}

TEST_CASE("conditioning is non-degenerate once branches are trained") {
  FieldFixture fx(Variant::kMaglo, 55, /*randomize=*/true);
  Pcg32 rng(20, 6);
  int differing = 0;
  for (int t = 0; t < 20; ++t) {
    const double x[3] = {rng.next_double(), rng.next_double(),
                         rng.next_double()};
    const auto d = lt::random_unit_dir(rng);
    fx.lm = lt::random_landmarks(rng, 3);
    const auto a = fx.eval(x, d.data());
    fx.lm = lt::random_landmarks(rng, 3);
    const auto b = fx.eval(x, d.data());
    if (std::abs(a.sigma - b.sigma) > 0 ||
        std::abs(a.rgb[0] - b.rgb[0]) > 0)
      ++differing;
  }
  CHECK(differing > 15);
}

TEST_CASE("masked positional levels do not influence the output") {
  FieldFixture fx(Variant::kMaglo, 31);
  const LevelMask mask{2};
  fx.mask = mask;
  Pcg32 rng(44, 2);
  const double x[3] = {0.4, 0.6, 0.3};
  const auto d = lt::random_unit_dir(rng);
  const auto before = fx.eval(x, d.data());
  // Perturb every entry of the masked levels.
  for (int l = mask.active_levels; l < fx.def.pos_grid.cfg.levels; ++l)
    for (auto& v : fx.store.values(fx.def.pos_grid.handles[l]))
      v += rng.uniform(0.5, 1.5);
  const auto after = fx.eval(x, d.data());
  CHECK(before.sigma == after.sigma);
  CHECK(before.rgb == after.rgb);
}

TEST_CASE("field gradients: finite-difference oracle across parameter groups") {
  // Covers every backward route: grid entries, sigma/color nets, branches,
  // cond MLP, landmark grid; GLO adds the input-concat route.
  for (Variant variant :
       {Variant::kMaglo, Variant::kGlo, Variant::kUnconditioned}) {
    CAPTURE(variant_to_string(variant));
    FieldFixture fx(variant, 1234 + static_cast<int>(variant));
    Pcg32 rng(77, static_cast<std::uint64_t>(variant) + 1);
    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
      lt::FieldProbe probe;
      probe.x = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95),
                 rng.uniform(0.05, 0.95)};
      probe.d = lt::random_unit_dir(rng);
      probe.a = rng.uniform(-1, 1);
      probe.b = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      fx.lm = lt::random_landmarks(rng, 3);

      const GradBuffer analytic = lt::field_objective_grads(
          fx.def, fx.store, &fx.lm, fx.mask, probe);

      std::vector<std::size_t> handles = {
          fx.def.pos_grid.handles[0],
          fx.def.pos_grid.handles[2],
          fx.def.sigma_net[0].w_handle,
          fx.def.sigma_net[1].b_handle,
          fx.def.color_net[0].w_handle,
      };
      if (fx.def.conditioned()) {
        handles.push_back(fx.def.cond->mlp.layers[0].w_handle);
        handles.push_back(fx.def.cond->lm_grid.handles[0]);
      }
      for (const auto& branch : fx.def.branches) {
        handles.push_back(branch.w_handle);
        handles.push_back(branch.b_handle);
      }
      for (std::size_t h : handles) {
        worst = std::max(
            worst, lt::check_entry_subset(fx.def, fx.store, &fx.lm, fx.mask,
                                          probe, analytic, h, 4, rng));
      }
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("float32 pipeline tracks the double pipeline") {
  FieldFixture fx(Variant::kMaglo, 61);
  FieldPipeline<double> pd(fx.def);
  pd.sync(fx.store);
  FieldPipeline<float> pf(fx.def);
  pf.sync(fx.store);

  std::vector<LandmarkFrame> window(fx.def.cond->window, fx.lm);
  const FrameContext ctx = make_frame_context(fx.def, fx.store, window);
  const auto cond_d = make_frame_cond<double>(fx.def, fx.store, ctx);
  const auto cond_f = make_frame_cond<float>(fx.def, fx.store, ctx);

  Pcg32 rng(8, 15);
  const int n = 32;
  std::vector<double> pts(n * 3), dirs(n * 3);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) pts[i * 3 + k] = rng.next_double();
    const auto d = lt::random_unit_dir(rng);
    for (int k = 0; k < 3; ++k) dirs[i * 3 + k] = d[k];
  }
  std::vector<double> sd(n), cd(n * 3);
  std::vector<float> sf(n), cf(n * 3);
  pd.forward(pts.data(), dirs.data(), n, fx.mask, &cond_d, sd.data(),
             cd.data());
  pf.forward(pts.data(), dirs.data(), n, fx.mask, &cond_f, sf.data(),
             cf.data());
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(sd[i] - sf[i]) <= 1e-3 * (1.0 + std::abs(sd[i])));
  for (int i = 0; i < n * 3; ++i) CHECK(std::abs(cd[i] - cf[i]) <= 1e-3);
}
