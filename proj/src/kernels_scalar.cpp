#include <cmath>
#include <cstring>

#include "lantern/kernels.hpp"

namespace lantern::kernels {
namespace {

template <class T>
T dot_scalar(const T* x, const T* y, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <class T>
void axpy_scalar(T a, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class T>
T sum_scalar(const T* x, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

template <class T>
T sq_diff_sum_scalar(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

template <class T>
void relu_scalar(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_backward_scalar(const T* pre, const T* dy, T* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = pre[i] > T(0) ? dy[i] : T(0);
}

template <class T>
void affine_modulate_scalar(const T* x, const T* alpha, const T* beta, T* y,
                            std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * (T(1) + beta[i]) + alpha[i];
}

template <class T>
void affine_modulate_backward_scalar(const T* dy, const T* x, const T* beta,
                                     T* dx, T* dalpha_acc, T* dbeta_acc,
                                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = dy[i] * (T(1) + beta[i]);
    dalpha_acc[i] += dy[i];
    dbeta_acc[i] += dy[i] * x[i];
  }
}

template <class T>
void linear_forward_scalar(const T* x, std::size_t batch, std::size_t in,
                           const T* w, const T* bias, std::size_t out, T* y) {
  for (std::size_t b = 0; b < batch; ++b) {
    const T* xr = x + b * in;
    T* yr = y + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      yr[o] = dot_scalar(xr, w + o * in, in) + (bias ? bias[o] : T(0));
    }
  }
}

template <class T>
void linear_input_grad_scalar(const T* dy, std::size_t batch, std::size_t out,
                              const T* w, std::size_t in, T* dx) {
  std::memset(dx, 0, batch * in * sizeof(T));
  for (std::size_t b = 0; b < batch; ++b) {
    const T* dyr = dy + b * out;
    T* dxr = dx + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      if (dyr[o] != T(0)) axpy_scalar(dyr[o], w + o * in, dxr, in);
    }
  }
}

template <class T>
void linear_param_grad_scalar(const T* x, const T* dy, std::size_t batch,
                              std::size_t in, std::size_t out, T* dw, T* db) {
  for (std::size_t b = 0; b < batch; ++b) {
    const T* xr = x + b * in;
    const T* dyr = dy + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      if (dyr[o] != T(0)) {
        axpy_scalar(dyr[o], xr, dw + o * in, in);
        db[o] += dyr[o];
      }
    }
  }
}

template <class T>
void adamw_update_scalar(T* w, const T* g, T* m, T* v, std::size_t n,
                         const AdamScalars<T>& s) {
  const T one = 1;
  const T decay = one - s.lr * s.weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.weight_decay == T(0) && g[i] == T(0) && m[i] == T(0) && v[i] == T(0))
      continue;
    w[i] *= decay;
    m[i] = s.beta1 * m[i] + (one - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (one - s.beta2) * (g[i] * g[i]);
    const T m_hat = m[i] / s.bias_c1;
    const T v_hat = v[i] / s.bias_c2;
    w[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

template <class T>
Ops<T> make_scalar_ops() {
  Ops<T> ops;
  ops.dot = dot_scalar<T>;
  ops.axpy = axpy_scalar<T>;
  ops.sum = sum_scalar<T>;
  ops.sq_diff_sum = sq_diff_sum_scalar<T>;
  ops.relu = relu_scalar<T>;
  ops.relu_backward = relu_backward_scalar<T>;
  ops.affine_modulate = affine_modulate_scalar<T>;
  ops.affine_modulate_backward = affine_modulate_backward_scalar<T>;
  ops.linear_forward = linear_forward_scalar<T>;
  ops.linear_input_grad = linear_input_grad_scalar<T>;
  ops.linear_param_grad = linear_param_grad_scalar<T>;
  ops.adamw_update = adamw_update_scalar<T>;
  return ops;
}

}  // namespace

const Ops<float>& scalar_ops_f32() {
  static const Ops<float> ops = make_scalar_ops<float>();
  return ops;
}

const Ops<double>& scalar_ops_f64() {
  static const Ops<double> ops = make_scalar_ops<double>();
  return ops;
}

}  // namespace lantern::kernels
