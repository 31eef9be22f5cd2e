#include "lantern/adamw.hpp"

#include <cmath>

#include "lantern/kernels.hpp"

namespace lantern {

AdamWState::AdamWState(const ParamStore& store) {
  m.resize(store.count());
  v.resize(store.count());
  for (std::size_t h = 0; h < store.count(); ++h) {
    m[h].assign(store.entry(h).values.size(), real(0));
    v[h].assign(store.entry(h).values.size(), real(0));
  }
}

void adamw_step(ParamStore& store, const GradBuffer& grads, AdamWState& state,
                const AdamWHyper& hp, double lr_multiplier) {
  LANTERN_CHECK(grads.count() == store.count(),
                "adamw_step: gradient buffer does not match store");
  LANTERN_CHECK(state.m.size() == store.count(),
                "adamw_step: optimizer state does not match store");
  LANTERN_CHECK(hp.lr_grid >= 0 && hp.lr_mlp >= 0 && lr_multiplier >= 0,
                "adamw_step: learning rates must be nonnegative");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
  const auto& k = kernels::ops_f64();

  for (std::size_t h = 0; h < store.count(); ++h) {
    ParamEntry& e = store.entry(h);
    const auto g = grads.grads(h);
    LANTERN_CHECK(g.size() == e.values.size(),
                  "adamw_step: gradient shape mismatch for entry '", e.name,
                  "'");
    LANTERN_CHECK(state.m[h].size() == e.values.size() &&
                      state.v[h].size() == e.values.size(),
                  "adamw_step: moment shape mismatch for entry '", e.name,
                  "'");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw EngineError(cat("adamw_step: non-finite gradient in entry '",
                              e.name, "' at index ", i));
    }

    kernels::AdamScalars<real> s;
    const bool grid = e.group == LrGroup::kGridEntries;
    s.lr = (grid ? hp.lr_grid : hp.lr_mlp) * lr_multiplier;
    s.beta1 = hp.beta1;
    s.beta2 = hp.beta2;
    s.eps = grid ? hp.eps_grid : hp.eps_mlp;
    s.weight_decay = e.weight_decay_eligible ? hp.weight_decay : 0.0;
    s.bias_c1 = bc1;
    s.bias_c2 = bc2;
    k.adamw_update(e.values.data(), g.data(), state.m[h].data(),
                   state.v[h].data(), g.size(), s);
  }
}

}  // namespace lantern
