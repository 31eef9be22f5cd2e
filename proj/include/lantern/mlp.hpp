#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lantern/kernels.hpp"
#include "lantern/param_store.hpp"

namespace lantern {

// One fully connected layer; weights [out, in] row-major plus bias [out],
// both stored in the ParamStore.
struct LinearDef {
  std::size_t w_handle = 0;
  std::size_t b_handle = 0;
  int in = 0;
  int out = 0;
};

enum class LinearInit { kHeUniform, kZero };

LinearDef create_linear(ParamStore& store, const std::string& prefix, int in,
                        int out, std::uint64_t seed, LinearInit init,
                        bool weight_decay_eligible = true);

template <class T>
struct LinearView {
  const T* w = nullptr;
  const T* b = nullptr;
  int in = 0;
  int out = 0;
};

inline LinearView<real> linear_view(const LinearDef& def,
                                    const ParamStore& store) {
  return {store.values(def.w_handle).data(), store.values(def.b_handle).data(),
          def.in, def.out};
}

template <class T>
void linear_forward(const LinearView<T>& l, const T* x, std::size_t batch,
                    T* y) {
  kernels::ops<T>().linear_forward(x, batch, static_cast<std::size_t>(l.in),
                                   l.w, l.b, static_cast<std::size_t>(l.out),
                                   y);
}

// dx may be null when the input gradient is not needed (first layer whose
// input is not differentiable).
template <class T>
void linear_backward(const LinearView<T>& l, const T* x, const T* dy,
                     std::size_t batch, T* dx, T* dw_acc, T* db_acc) {
  const auto& k = kernels::ops<T>();
  if (dx)
    k.linear_input_grad(dy, batch, static_cast<std::size_t>(l.out), l.w,
                        static_cast<std::size_t>(l.in), dx);
  k.linear_param_grad(x, dy, batch, static_cast<std::size_t>(l.in),
                      static_cast<std::size_t>(l.out), dw_acc, db_acc);
}

// Plain ReLU MLP: linear layers with ReLU between them, linear output.
struct MlpDef {
  std::vector<LinearDef> layers;
  int in = 0;
  int out = 0;
};

MlpDef create_mlp(ParamStore& store, const std::string& prefix,
                  const std::vector<int>& dims, std::uint64_t seed);

// Forward caches for the backward pass: pre[i] holds layer i pre-activations,
// act[i] its post-ReLU output (act for the last layer is the raw output).
struct MlpCache {
  std::vector<std::vector<real>> pre;
  std::vector<std::vector<real>> act;
  std::size_t batch = 0;
};

void mlp_forward(const MlpDef& def, const ParamStore& store, const real* x,
                 std::size_t batch, real* y, MlpCache* cache = nullptr);

// Backward from dL/dy. x must be the forward input; dx may be null.
void mlp_backward(const MlpDef& def, const ParamStore& store,
                  const MlpCache& cache, const real* x, const real* dy,
                  real* dx, GradBuffer& grads);

}  // namespace lantern
