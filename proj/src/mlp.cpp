#include "lantern/mlp.hpp"

#include <cmath>

#include "lantern/rng.hpp"

namespace lantern {

LinearDef create_linear(ParamStore& store, const std::string& prefix, int in,
                        int out, std::uint64_t seed, LinearInit init,
                        bool weight_decay_eligible) {
  LANTERN_CHECK(in >= 1 && out >= 1, "linear '", prefix,
                "': widths must be positive");
  LinearDef def;
  def.in = in;
  def.out = out;
  def.w_handle = store.add(prefix + "/w",
                           {static_cast<std::size_t>(out),
                            static_cast<std::size_t>(in)},
                           LrGroup::kMlp, weight_decay_eligible);
  def.b_handle = store.add(prefix + "/b", {static_cast<std::size_t>(out)},
                           LrGroup::kMlp, false);
  if (init == LinearInit::kHeUniform) {
    const double bound = std::sqrt(6.0 / in);
    Pcg32 rng(seed,
              rng_stream(0x6d6c70ULL, std::hash<std::string>{}(prefix)));
    for (real& v : store.values(def.w_handle))
      v = real(rng.uniform(-bound, bound));
  }
  return def;
}

MlpDef create_mlp(ParamStore& store, const std::string& prefix,
                  const std::vector<int>& dims, std::uint64_t seed) {
  LANTERN_CHECK(dims.size() >= 2, "mlp '", prefix, "': need at least 2 dims");
  MlpDef def;
  def.in = dims.front();
  def.out = dims.back();
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    def.layers.push_back(create_linear(store, cat(prefix, "/fc", i), dims[i],
                                       dims[i + 1], seed,
                                       LinearInit::kHeUniform));
  }
  return def;
}

void mlp_forward(const MlpDef& def, const ParamStore& store, const real* x,
                 std::size_t batch, real* y, MlpCache* cache) {
  const auto& k = kernels::ops_f64();
  const std::size_t n_layers = def.layers.size();
  if (cache) {
    cache->pre.assign(n_layers, {});
    cache->act.assign(n_layers, {});
    cache->batch = batch;
  }
  std::vector<real> cur(x, x + batch * def.in);
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto l = linear_view(def.layers[i], store);
    std::vector<real> pre(batch * l.out);
    linear_forward(l, cur.data(), batch, pre.data());
    const bool last = i + 1 == n_layers;
    std::vector<real> act(batch * l.out);
    if (last)
      act = pre;
    else
      k.relu(pre.data(), act.data(), pre.size());
    if (cache) {
      cache->pre[i] = pre;
      cache->act[i] = act;
    }
    cur = std::move(act);
  }
  std::copy(cur.begin(), cur.end(), y);
}

void mlp_backward(const MlpDef& def, const ParamStore& store,
                  const MlpCache& cache, const real* x, const real* dy,
                  real* dx, GradBuffer& grads) {
  const auto& k = kernels::ops_f64();
  const std::size_t n_layers = def.layers.size();
  LANTERN_CHECK(cache.pre.size() == n_layers,
                "mlp_backward: cache does not match network");
  const std::size_t batch = cache.batch;
  std::vector<real> delta(dy, dy + batch * def.out);
  for (std::size_t i = n_layers; i-- > 0;) {
    const auto l = linear_view(def.layers[i], store);
    if (i + 1 < n_layers) {
      // delta currently holds dL/d(act_i); gate through the ReLU.
      std::vector<real> gated(delta.size());
      k.relu_backward(cache.pre[i].data(), delta.data(), gated.data(),
                      delta.size());
      delta = std::move(gated);
    }
    const real* input = i == 0 ? x : cache.act[i - 1].data();
    std::vector<real> dinput;
    real* dinput_ptr = nullptr;
    if (i > 0 || dx) {
      dinput.assign(batch * l.in, real(0));
      dinput_ptr = dinput.data();
    }
    linear_backward(l, input, delta.data(), batch, dinput_ptr,
                    grads.grads(def.layers[i].w_handle).data(),
                    grads.grads(def.layers[i].b_handle).data());
    if (i == 0) {
      if (dx) std::copy(dinput.begin(), dinput.end(), dx);
    } else {
      delta = std::move(dinput);
    }
  }
}

}  // namespace lantern
