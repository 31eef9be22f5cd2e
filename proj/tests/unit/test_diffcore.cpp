#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lantern/adamw.hpp"
#include "lantern/checkpoint.hpp"
#include "lantern/grad_check.hpp"
#include "lantern/mlp.hpp"
#include "lantern/rng.hpp"

using namespace lantern;

namespace {

ParamStore single_scalar_store(double value) {
  ParamStore store;
  const std::size_t h = store.add("w", {1}, LrGroup::kMlp, false);
  store.values(h)[0] = value;
  return store;
}

}  // namespace

TEST_CASE("adamw: zero gradients and zero decay leave parameters unchanged") {
  ParamStore store;
  const std::size_t h = store.add("p", {4}, LrGroup::kMlp, true);
  for (std::size_t i = 0; i < 4; ++i) store.values(h)[i] = 0.5 * (i + 1);
  const std::vector<real> before(store.values(h).begin(),
                                 store.values(h).end());
  GradBuffer grads(store);
  AdamWState state(store);
  AdamWHyper hp;
  hp.weight_decay = 0.0;
  adamw_step(store, grads, state, hp);
  for (std::size_t i = 0; i < 4; ++i) CHECK(store.values(h)[i] == before[i]);
  CHECK(state.t == 1);
}

TEST_CASE("adamw: first bias-corrected step moves by ~ -lr * sign(g)") {
  ParamStore store = single_scalar_store(1.0);
  GradBuffer grads(store);
  grads.grads(0)[0] = 0.5;
  AdamWState state(store);
  AdamWHyper hp;
  hp.lr_mlp = 0.1;
  hp.eps_mlp = 1e-12;
  hp.weight_decay = 0.0;
  adamw_step(store, grads, state, hp);
  CHECK(store.values(0)[0] == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("adamw: decoupled decay applies alone when gradient is zero") {
  ParamStore store;
  const std::size_t h = store.add("w", {1}, LrGroup::kMlp, true);
  store.values(h)[0] = 2.0;
  GradBuffer grads(store);
  AdamWState state(store);
  AdamWHyper hp;
  hp.lr_mlp = 0.1;
  hp.weight_decay = 0.1;
  adamw_step(store, grads, state, hp);
  CHECK(store.values(h)[0] == doctest::Approx(1.98).epsilon(1e-12));
}

TEST_CASE("adamw: bitwise deterministic for identical inputs") {
  auto run = [] {
    ParamStore store;
    const std::size_t h = store.add("w", {8}, LrGroup::kGridEntries, false);
    Pcg32 rng(3, 1);
    for (auto& v : store.values(h)) v = rng.uniform(-1, 1);
    GradBuffer grads(store);
    Pcg32 rng2(4, 2);
    for (auto& g : grads.grads(h)) g = rng2.uniform(-1, 1);
    AdamWState state(store);
    AdamWHyper hp;
    for (int i = 0; i < 5; ++i) adamw_step(store, grads, state, hp);
    return std::vector<real>(store.values(h).begin(), store.values(h).end());
  };
  CHECK(run() == run());
}

TEST_CASE("adamw: non-finite gradient is a hard error naming the entry") {
  ParamStore store = single_scalar_store(1.0);
  GradBuffer grads(store);
  grads.grads(0)[0] = std::nan("");
  AdamWState state(store);
  AdamWHyper hp;
  CHECK_THROWS_WITH_AS(adamw_step(store, grads, state, hp),
                       doctest::Contains("'w'"), EngineError);
}

TEST_CASE("param store: rejects duplicates, enforces shape congruence") {
  ParamStore store;
  store.add("a", {2, 3}, LrGroup::kMlp, false);
  CHECK_THROWS_AS(store.add("a", {6}, LrGroup::kMlp, false), ValidationError);
  CHECK(store.entry(0).values.size() == 6);
  CHECK_THROWS_AS(store.handle("missing"), ValidationError);
}

TEST_CASE("grad buffer: fixed-order worker merge") {
  ParamStore store;
  store.add("p", {3}, LrGroup::kMlp, false);
  GradBuffer total(store), w0(store), w1(store);
  w0.grads(0)[0] = 1.0;
  w0.grads(0)[2] = 0.25;
  w1.grads(0)[0] = 2.0;
  w1.grads(0)[1] = -1.0;
  total.add_from(w0);
  total.add_from(w1);
  CHECK(total.grads(0)[0] == 3.0);
  CHECK(total.grads(0)[1] == -1.0);
  CHECK(total.grads(0)[2] == 0.25);
  total.reset();
  CHECK(total.grads(0)[0] == 0.0);
}

TEST_CASE("gradient_check: exact for linear and quadratic maps") {
  auto linear = [](std::span<const double> x) { return 3.0 * x[0]; };
  const double p0[] = {1.7};
  const double g_lin[] = {3.0};
  CHECK(gradient_check(linear, std::span(p0, 1), std::span(g_lin, 1), 1e-3) <
        1e-10);

  auto quad = [](std::span<const double> x) { return x[0] * x[0]; };
  const double p1[] = {1.0};
  const double g_quad[] = {2.0};
  CHECK(gradient_check(quad, std::span(p1, 1), std::span(g_quad, 1), 1e-3) <
        1e-12);
}

TEST_CASE("gradient_check: flags a wrong gradient") {
  auto quad = [](std::span<const double> x) { return x[0] * x[0]; };
  const double p[] = {1.0};
  const double bad[] = {2.5};
  CHECK(gradient_check(quad, std::span(p, 1), std::span(bad, 1), 1e-3) > 0.1);
}

TEST_CASE("gradient_check: random two-layer network within 1e-4") {
  ParamStore store;
  MlpDef net = create_mlp(store, "net", {4, 8, 1}, 99);
  Pcg32 rng(5, 11);
  std::vector<double> input(4);
  for (auto& v : input) v = rng.uniform(-1, 1);

  // Check gradients w.r.t. the first-layer weights.
  const std::size_t wh = net.layers[0].w_handle;
  GradBuffer grads(store);
  MlpCache cache;
  double out;
  mlp_forward(net, store, input.data(), 1, &out, &cache);
  const double dy = 1.0;
  mlp_backward(net, store, cache, input.data(), &dy, nullptr, grads);

  std::vector<double> point(store.values(wh).begin(), store.values(wh).end());
  std::vector<double> analytic(grads.grads(wh).begin(),
                               grads.grads(wh).end());
  auto f = [&](std::span<const double> w) {
    ParamStore local = store;
    std::copy(w.begin(), w.end(), local.values(wh).begin());
    double y;
    mlp_forward(net, local, input.data(), 1, &y, nullptr);
    return y;
  };
  CHECK(gradient_check(f, point, analytic, 1e-3) <= 1e-4);
}

TEST_CASE("rng: determinism, stream separation, uniform mean") {
  Pcg32 a(123, 7), b(123, 7), c(123, 8);
  auto sa = a.uniforms(64);
  auto sb = b.uniforms(64);
  auto sc = c.uniforms(64);
  CHECK(sa == sb);
  CHECK(sa != sc);

  Pcg32 big(2024, 0);
  double mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) mean += big.next_double();
  mean /= n;
  CHECK(mean > 0.49);
  CHECK(mean < 0.51);
}

TEST_CASE("checkpoint: byte-exact round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lantern_ckpt_test";
  fs::create_directories(dir);
  const std::string path_a = (dir / "a.r2tk").string();
  const std::string path_b = (dir / "b.r2tk").string();

  auto build = [] {
    ParamStore store;
    store.add("grid/l00", {5, 2}, LrGroup::kGridEntries, false);
    store.add("net/fc0/w", {3, 4}, LrGroup::kMlp, true);
    return store;
  };
  ParamStore store = build();
  Pcg32 rng(8, 3);
  for (std::size_t h = 0; h < store.count(); ++h)
    for (auto& v : store.values(h)) v = rng.uniform(-2, 2);

  save_checkpoint(store, path_a);
  ParamStore loaded = build();
  load_checkpoint(loaded, path_a);
  save_checkpoint(loaded, path_b);

  std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
  std::string ba((std::istreambuf_iterator<char>(fa)), {});
  std::string bb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(ba == bb);
  CHECK(!ba.empty());
  CHECK(ba.substr(0, 4) == "R2TK");

  for (std::size_t h = 0; h < store.count(); ++h) {
    const auto sv = store.values(h);
    const auto lv = loaded.values(h);
    CHECK(std::equal(sv.begin(), sv.end(), lv.begin()));
  }

  // Structural mismatches are hard errors.
  ParamStore wrong;
  wrong.add("grid/l00", {5, 2}, LrGroup::kGridEntries, false);
  CHECK_THROWS_AS(load_checkpoint(wrong, path_a), ValidationError);

  std::ofstream bad((dir / "bad.r2tk").string(), std::ios::binary);
  bad << "NOPE";
  bad.close();
  ParamStore fresh = build();
  CHECK_THROWS_AS(load_checkpoint(fresh, (dir / "bad.r2tk").string()),
                  ValidationError);
}
