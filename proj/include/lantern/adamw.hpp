#pragma once

#include <cstdint>
#include <vector>

#include "lantern/param_store.hpp"

namespace lantern {

struct AdamWHyper {
  double lr_grid = 1e-2;
  double lr_mlp = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  // Hash-grid entries train with a much smaller eps than dense layers.
  double eps_grid = 1e-15;
  double eps_mlp = 1e-8;
  double weight_decay = 1e-6;  // applied only to weight-decay-eligible entries
};

struct AdamWState {
  std::vector<std::vector<real>> m;
  std::vector<std::vector<real>> v;
  std::uint64_t t = 0;

  AdamWState() = default;
  explicit AdamWState(const ParamStore& store);
};

// One decoupled-weight-decay Adam step over every entry in the store.
// lr_multiplier scales both group learning rates (schedule hook).
// Gradients are left untouched; the caller resets them.
void adamw_step(ParamStore& store, const GradBuffer& grads, AdamWState& state,
                const AdamWHyper& hp, double lr_multiplier = 1.0);

}  // namespace lantern
