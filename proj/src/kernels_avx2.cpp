// AVX2+FMA variants of the inner-loop kernels. Compiled with per-function
// target attributes so the translation unit builds into a baseline binary;
// the dispatcher only installs these when the CPU reports avx2+fma.
//
// Elementwise kernels (relu, modulate, axpy, adamw) use mul/add rather than
// fma so they produce bit-identical results to the scalar reference.
// Reductions (dot, sums, linear_forward) use fma and a fixed lane tree, so
// they agree with the reference only to rounding; tests bound the drift.

#include "lantern/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define LANTERN_HAVE_AVX2_TU 1
#include <immintrin.h>

#include <cmath>
#include <cstring>
#endif

namespace lantern::kernels {

#if LANTERN_HAVE_AVX2_TU

#define LANTERN_AVX2 __attribute__((target("avx2,fma")))

namespace {

LANTERN_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

LANTERN_AVX2 inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  lo = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, lo);
  return _mm_cvtss_f32(_mm_add_ss(lo, shuf));
}

// ---------------------------------------------------------------- double --

LANTERN_AVX2 double dot_avx2_d(const double* x, const double* y,
                               std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

LANTERN_AVX2 void axpy_avx2_d(double a, const double* x, double* y,
                              std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

LANTERN_AVX2 double sum_avx2_d(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

LANTERN_AVX2 double sq_diff_sum_avx2_d(const double* a, const double* b,
                                       std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

LANTERN_AVX2 void relu_avx2_d(const double* x, double* y, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

LANTERN_AVX2 void relu_backward_avx2_d(const double* pre, const double* dy,
                                       double* dx, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(dx + i, _mm256_and_pd(mask, _mm256_loadu_pd(dy + i)));
  }
  for (; i < n; ++i) dx[i] = pre[i] > 0.0 ? dy[i] : 0.0;
}

LANTERN_AVX2 void affine_modulate_avx2_d(const double* x, const double* alpha,
                                         const double* beta, double* y,
                                         std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d scale = _mm256_add_pd(one, _mm256_loadu_pd(beta + i));
    __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(x + i), scale);
    _mm256_storeu_pd(y + i, _mm256_add_pd(prod, _mm256_loadu_pd(alpha + i)));
  }
  for (; i < n; ++i) y[i] = x[i] * (1.0 + beta[i]) + alpha[i];
}

LANTERN_AVX2 void affine_modulate_backward_avx2_d(const double* dy,
                                                  const double* x,
                                                  const double* beta,
                                                  double* dx, double* dalpha,
                                                  double* dbeta,
                                                  std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dyv = _mm256_loadu_pd(dy + i);
    const __m256d scale = _mm256_add_pd(one, _mm256_loadu_pd(beta + i));
    _mm256_storeu_pd(dx + i, _mm256_mul_pd(dyv, scale));
    _mm256_storeu_pd(dalpha + i,
                     _mm256_add_pd(_mm256_loadu_pd(dalpha + i), dyv));
    __m256d db = _mm256_mul_pd(dyv, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(dbeta + i, _mm256_add_pd(_mm256_loadu_pd(dbeta + i), db));
  }
  for (; i < n; ++i) {
    dx[i] = dy[i] * (1.0 + beta[i]);
    dalpha[i] += dy[i];
    dbeta[i] += dy[i] * x[i];
  }
}

LANTERN_AVX2 void linear_forward_avx2_d(const double* x, std::size_t batch,
                                        std::size_t in, const double* w,
                                        const double* bias, std::size_t out,
                                        double* y) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = x + b * in;
    double* yr = y + b * out;
    std::size_t o = 0;
    for (; o + 4 <= out; o += 4) {
      const double* w0 = w + (o + 0) * in;
      const double* w1 = w + (o + 1) * in;
      const double* w2 = w + (o + 2) * in;
      const double* w3 = w + (o + 3) * in;
      __m256d a0 = _mm256_setzero_pd();
      __m256d a1 = _mm256_setzero_pd();
      __m256d a2 = _mm256_setzero_pd();
      __m256d a3 = _mm256_setzero_pd();
      std::size_t k = 0;
      for (; k + 4 <= in; k += 4) {
        const __m256d xv = _mm256_loadu_pd(xr + k);
        a0 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w0 + k), a0);
        a1 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w1 + k), a1);
        a2 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w2 + k), a2);
        a3 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(w3 + k), a3);
      }
      double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
      for (; k < in; ++k) {
        s0 += xr[k] * w0[k];
        s1 += xr[k] * w1[k];
        s2 += xr[k] * w2[k];
        s3 += xr[k] * w3[k];
      }
      yr[o + 0] = s0 + (bias ? bias[o + 0] : 0.0);
      yr[o + 1] = s1 + (bias ? bias[o + 1] : 0.0);
      yr[o + 2] = s2 + (bias ? bias[o + 2] : 0.0);
      yr[o + 3] = s3 + (bias ? bias[o + 3] : 0.0);
    }
    for (; o < out; ++o)
      yr[o] = dot_avx2_d(xr, w + o * in, in) + (bias ? bias[o] : 0.0);
  }
}

LANTERN_AVX2 void linear_input_grad_avx2_d(const double* dy, std::size_t batch,
                                           std::size_t out, const double* w,
                                           std::size_t in, double* dx) {
  std::memset(dx, 0, batch * in * sizeof(double));
  for (std::size_t b = 0; b < batch; ++b) {
    const double* dyr = dy + b * out;
    double* dxr = dx + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      if (dyr[o] != 0.0) axpy_avx2_d(dyr[o], w + o * in, dxr, in);
    }
  }
}

LANTERN_AVX2 void linear_param_grad_avx2_d(const double* x, const double* dy,
                                           std::size_t batch, std::size_t in,
                                           std::size_t out, double* dw,
                                           double* db) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = x + b * in;
    const double* dyr = dy + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      if (dyr[o] != 0.0) {
        axpy_avx2_d(dyr[o], xr, dw + o * in, in);
        db[o] += dyr[o];
      }
    }
  }
}

LANTERN_AVX2 void adamw_update_avx2_d(double* w, const double* g, double* m,
                                      double* v, std::size_t n,
                                      const AdamScalars<double>& s) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d b1 = _mm256_set1_pd(s.beta1);
  const __m256d b1c = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2);
  const __m256d b2c = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d bc1 = _mm256_set1_pd(s.bias_c1);
  const __m256d bc2 = _mm256_set1_pd(s.bias_c2);
  const __m256d eps = _mm256_set1_pd(s.eps);
  const __m256d lr = _mm256_set1_pd(s.lr);
  const __m256d decay = _mm256_set1_pd(1.0 - s.lr * s.weight_decay);
  const bool can_skip = s.weight_decay == 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    if (can_skip) {
      __m256d idle = _mm256_and_pd(
          _mm256_cmp_pd(gv, zero, _CMP_EQ_OQ),
          _mm256_and_pd(_mm256_cmp_pd(mv, zero, _CMP_EQ_OQ),
                        _mm256_cmp_pd(vv, zero, _CMP_EQ_OQ)));
      if (_mm256_movemask_pd(idle) == 0xF) continue;
    }
    __m256d wv = _mm256_mul_pd(_mm256_loadu_pd(w + i), decay);
    mv = _mm256_add_pd(_mm256_mul_pd(b1, mv), _mm256_mul_pd(b1c, gv));
    vv = _mm256_add_pd(_mm256_mul_pd(b2, vv),
                       _mm256_mul_pd(b2c, _mm256_mul_pd(gv, gv)));
    const __m256d m_hat = _mm256_div_pd(mv, bc1);
    const __m256d v_hat = _mm256_div_pd(vv, bc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps);
    wv = _mm256_sub_pd(wv, _mm256_div_pd(_mm256_mul_pd(lr, m_hat), denom));
    _mm256_storeu_pd(w + i, wv);
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
  }
  for (; i < n; ++i) {
    if (can_skip && g[i] == 0.0 && m[i] == 0.0 && v[i] == 0.0) continue;
    w[i] *= 1.0 - s.lr * s.weight_decay;
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * (g[i] * g[i]);
    const double m_hat = m[i] / s.bias_c1;
    const double v_hat = v[i] / s.bias_c2;
    w[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

// ----------------------------------------------------------------- float --

LANTERN_AVX2 float dot_avx2_f(const float* x, const float* y, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
  }
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

LANTERN_AVX2 void axpy_avx2_f(float a, const float* x, float* y,
                              std::size_t n) {
  const __m256 av = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 prod = _mm256_mul_ps(av, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

LANTERN_AVX2 float sum_avx2_f(const float* x, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

LANTERN_AVX2 float sq_diff_sum_avx2_f(const float* a, const float* b,
                                      std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_fmadd_ps(d, d, acc);
  }
  float s = hsum(acc);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

LANTERN_AVX2 void relu_avx2_f(const float* x, float* y, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.f ? x[i] : 0.f;
}

LANTERN_AVX2 void relu_backward_avx2_f(const float* pre, const float* dy,
                                       float* dx, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(dx + i, _mm256_and_ps(mask, _mm256_loadu_ps(dy + i)));
  }
  for (; i < n; ++i) dx[i] = pre[i] > 0.f ? dy[i] : 0.f;
}

LANTERN_AVX2 void affine_modulate_avx2_f(const float* x, const float* alpha,
                                         const float* beta, float* y,
                                         std::size_t n) {
  const __m256 one = _mm256_set1_ps(1.f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 scale = _mm256_add_ps(one, _mm256_loadu_ps(beta + i));
    __m256 prod = _mm256_mul_ps(_mm256_loadu_ps(x + i), scale);
    _mm256_storeu_ps(y + i, _mm256_add_ps(prod, _mm256_loadu_ps(alpha + i)));
  }
  for (; i < n; ++i) y[i] = x[i] * (1.f + beta[i]) + alpha[i];
}

LANTERN_AVX2 void affine_modulate_backward_avx2_f(const float* dy,
                                                  const float* x,
                                                  const float* beta, float* dx,
                                                  float* dalpha, float* dbeta,
                                                  std::size_t n) {
  const __m256 one = _mm256_set1_ps(1.f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 dyv = _mm256_loadu_ps(dy + i);
    const __m256 scale = _mm256_add_ps(one, _mm256_loadu_ps(beta + i));
    _mm256_storeu_ps(dx + i, _mm256_mul_ps(dyv, scale));
    _mm256_storeu_ps(dalpha + i, _mm256_add_ps(_mm256_loadu_ps(dalpha + i), dyv));
    __m256 db = _mm256_mul_ps(dyv, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(dbeta + i, _mm256_add_ps(_mm256_loadu_ps(dbeta + i), db));
  }
  for (; i < n; ++i) {
    dx[i] = dy[i] * (1.f + beta[i]);
    dalpha[i] += dy[i];
    dbeta[i] += dy[i] * x[i];
  }
}

LANTERN_AVX2 void linear_forward_avx2_f(const float* x, std::size_t batch,
                                        std::size_t in, const float* w,
                                        const float* bias, std::size_t out,
                                        float* y) {
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xr = x + b * in;
    float* yr = y + b * out;
    std::size_t o = 0;
    for (; o + 4 <= out; o += 4) {
      const float* w0 = w + (o + 0) * in;
      const float* w1 = w + (o + 1) * in;
      const float* w2 = w + (o + 2) * in;
      const float* w3 = w + (o + 3) * in;
      __m256 a0 = _mm256_setzero_ps();
      __m256 a1 = _mm256_setzero_ps();
      __m256 a2 = _mm256_setzero_ps();
      __m256 a3 = _mm256_setzero_ps();
      std::size_t k = 0;
      for (; k + 8 <= in; k += 8) {
        const __m256 xv = _mm256_loadu_ps(xr + k);
        a0 = _mm256_fmadd_ps(xv, _mm256_loadu_ps(w0 + k), a0);
        a1 = _mm256_fmadd_ps(xv, _mm256_loadu_ps(w1 + k), a1);
        a2 = _mm256_fmadd_ps(xv, _mm256_loadu_ps(w2 + k), a2);
        a3 = _mm256_fmadd_ps(xv, _mm256_loadu_ps(w3 + k), a3);
      }
      float s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
      for (; k < in; ++k) {
        s0 += xr[k] * w0[k];
        s1 += xr[k] * w1[k];
        s2 += xr[k] * w2[k];
        s3 += xr[k] * w3[k];
      }
      yr[o + 0] = s0 + (bias ? bias[o + 0] : 0.f);
      yr[o + 1] = s1 + (bias ? bias[o + 1] : 0.f);
      yr[o + 2] = s2 + (bias ? bias[o + 2] : 0.f);
      yr[o + 3] = s3 + (bias ? bias[o + 3] : 0.f);
    }
    for (; o < out; ++o)
      yr[o] = dot_avx2_f(xr, w + o * in, in) + (bias ? bias[o] : 0.f);
  }
}

LANTERN_AVX2 void linear_input_grad_avx2_f(const float* dy, std::size_t batch,
                                           std::size_t out, const float* w,
                                           std::size_t in, float* dx) {
  std::memset(dx, 0, batch * in * sizeof(float));
  for (std::size_t b = 0; b < batch; ++b) {
    const float* dyr = dy + b * out;
    float* dxr = dx + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      if (dyr[o] != 0.f) axpy_avx2_f(dyr[o], w + o * in, dxr, in);
    }
  }
}

LANTERN_AVX2 void linear_param_grad_avx2_f(const float* x, const float* dy,
                                           std::size_t batch, std::size_t in,
                                           std::size_t out, float* dw,
                                           float* db) {
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xr = x + b * in;
    const float* dyr = dy + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      if (dyr[o] != 0.f) {
        axpy_avx2_f(dyr[o], xr, dw + o * in, in);
        db[o] += dyr[o];
      }
    }
  }
}

LANTERN_AVX2 void adamw_update_avx2_f(float* w, const float* g, float* m,
                                      float* v, std::size_t n,
                                      const AdamScalars<float>& s) {
  for (std::size_t i = 0; i < n; ++i) {
    if (s.weight_decay == 0.f && g[i] == 0.f && m[i] == 0.f && v[i] == 0.f)
      continue;
    w[i] *= 1.f - s.lr * s.weight_decay;
    m[i] = s.beta1 * m[i] + (1.f - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.f - s.beta2) * (g[i] * g[i]);
    const float m_hat = m[i] / s.bias_c1;
    const float v_hat = v[i] / s.bias_c2;
    w[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace

const Ops<double>* avx2_ops_f64() {
  static const Ops<double> ops = [] {
    Ops<double> o;
    o.dot = dot_avx2_d;
    o.axpy = axpy_avx2_d;
    o.sum = sum_avx2_d;
    o.sq_diff_sum = sq_diff_sum_avx2_d;
    o.relu = relu_avx2_d;
    o.relu_backward = relu_backward_avx2_d;
    o.affine_modulate = affine_modulate_avx2_d;
    o.affine_modulate_backward = affine_modulate_backward_avx2_d;
    o.linear_forward = linear_forward_avx2_d;
    o.linear_input_grad = linear_input_grad_avx2_d;
    o.linear_param_grad = linear_param_grad_avx2_d;
    o.adamw_update = adamw_update_avx2_d;
    return o;
  }();
  return avx2_supported() ? &ops : nullptr;
}

const Ops<float>* avx2_ops_f32() {
  static const Ops<float> ops = [] {
    Ops<float> o;
    o.dot = dot_avx2_f;
    o.axpy = axpy_avx2_f;
    o.sum = sum_avx2_f;
    o.sq_diff_sum = sq_diff_sum_avx2_f;
    o.relu = relu_avx2_f;
    o.relu_backward = relu_backward_avx2_f;
    o.affine_modulate = affine_modulate_avx2_f;
    o.affine_modulate_backward = affine_modulate_backward_avx2_f;
    o.linear_forward = linear_forward_avx2_f;
    o.linear_input_grad = linear_input_grad_avx2_f;
    o.linear_param_grad = linear_param_grad_avx2_f;
    o.adamw_update = adamw_update_avx2_f;
    return o;
  }();
  return avx2_supported() ? &ops : nullptr;
}

bool avx2_supported() {
  static const bool ok =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
}

#else  // !LANTERN_HAVE_AVX2_TU

const Ops<double>* avx2_ops_f64() { return nullptr; }
const Ops<float>* avx2_ops_f32() { return nullptr; }
bool avx2_supported() { return false; }

#endif

}  // namespace lantern::kernels
