#pragma once

#include <cstddef>
#include <string>

namespace lantern::kernels {

// Scalar hyperparameters for one elementwise AdamW sweep. Bias corrections
// are precomputed by the caller (bc1 = 1 - beta1^t, bc2 = 1 - beta2^t).
template <class T>
struct AdamScalars {
  T lr;
  T beta1;
  T beta2;
  T eps;
  T weight_decay;
  T bias_c1;
  T bias_c2;
};

// Function table for the data-parallel inner loops. Every member has a
// scalar reference implementation and may have SIMD variants; the active
// table is chosen once at startup (see select_backend). All matrices are
// row-major. Weight matrices are [out x in].
template <class T>
struct Ops {
  T (*dot)(const T* x, const T* y, std::size_t n);
  // y += a * x
  void (*axpy)(T a, const T* x, T* y, std::size_t n);
  T (*sum)(const T* x, std::size_t n);
  T (*sq_diff_sum)(const T* a, const T* b, std::size_t n);
  void (*relu)(const T* x, T* y, std::size_t n);
  // dx = (pre > 0) ? dy : 0
  void (*relu_backward)(const T* pre, const T* dy, T* dx, std::size_t n);
  // y = x * (1 + beta) + alpha
  void (*affine_modulate)(const T* x, const T* alpha, const T* beta, T* y,
                          std::size_t n);
  // dx = dy * (1 + beta); dalpha += dy; dbeta += dy * x
  void (*affine_modulate_backward)(const T* dy, const T* x, const T* beta,
                                   T* dx, T* dalpha_acc, T* dbeta_acc,
                                   std::size_t n);
  // y[b,:] = x[b,:] W^T + bias
  void (*linear_forward)(const T* x, std::size_t batch, std::size_t in,
                         const T* w, const T* bias, std::size_t out, T* y);
  // dx[b,:] = dy[b,:] W
  void (*linear_input_grad)(const T* dy, std::size_t batch, std::size_t out,
                            const T* w, std::size_t in, T* dx);
  // dw += dy^T x; db += column sums of dy
  void (*linear_param_grad)(const T* x, const T* dy, std::size_t batch,
                            std::size_t in, std::size_t out, T* dw, T* db);
  // Decoupled weight decay, then moment update with bias correction.
  // Elements with g == m == v == 0 and weight_decay == 0 are exact no-ops.
  void (*adamw_update)(T* w, const T* g, T* m, T* v, std::size_t n,
                       const AdamScalars<T>& s);
};

enum class Backend { kScalar, kAvx2 };

const Ops<float>& scalar_ops_f32();
const Ops<double>& scalar_ops_f64();

// Null when the binary or CPU lacks AVX2+FMA.
const Ops<float>* avx2_ops_f32();
const Ops<double>* avx2_ops_f64();

bool avx2_supported();

// Active dispatch tables. Defaults to the best supported backend at first
// use; select_backend overrides (throws ValidationError if unsupported).
const Ops<float>& ops_f32();
const Ops<double>& ops_f64();
void select_backend(Backend b);
Backend active_backend();
std::string backend_name(Backend b);

template <class T>
const Ops<T>& ops();

template <>
inline const Ops<float>& ops<float>() {
  return ops_f32();
}
template <>
inline const Ops<double>& ops<double>() {
  return ops_f64();
}

}  // namespace lantern::kernels
