#include "tote/kernels/kernels.hpp"

#ifdef TOTE_KERNELS_AVX2

#include <immintrin.h>

#include <cstring>

namespace tote::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// c[0..n) += a * b[0..n)
inline void fma_row(int n, double a, const double* b, double* c) {
  const __m256d av = _mm256_set1_pd(a);
  int j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d cv = _mm256_loadu_pd(c + j);
    cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + j), cv);
    _mm256_storeu_pd(c + j, cv);
  }
  for (; j < n; ++j) c[j] += a * b[j];
}

}  // namespace

void gemm_nn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(double) * size_t(m) * size_t(n));
  for (int i = 0; i < m; ++i) {
    double* c = C + size_t(i) * n;
    const double* a = A + size_t(i) * k;
    int p = 0;
    // Two k-steps per pass halves the C row traffic.
    for (; p + 2 <= k; p += 2) {
      const double a0 = a[p], a1 = a[p + 1];
      const double* b0 = B + size_t(p) * n;
      const double* b1 = b0 + n;
      const __m256d av0 = _mm256_set1_pd(a0);
      const __m256d av1 = _mm256_set1_pd(a1);
      int j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d cv = _mm256_loadu_pd(c + j);
        cv = _mm256_fmadd_pd(av0, _mm256_loadu_pd(b0 + j), cv);
        cv = _mm256_fmadd_pd(av1, _mm256_loadu_pd(b1 + j), cv);
        _mm256_storeu_pd(c + j, cv);
      }
      for (; j < n; ++j) c[j] += a0 * b0[j] + a1 * b1[j];
    }
    for (; p < k; ++p) fma_row(n, a[p], B + size_t(p) * n, c);
  }
}

void gemm_nt(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* a = A + size_t(i) * k;
    double* c = C + size_t(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* b = B + size_t(j) * k;
      __m256d acc = _mm256_setzero_pd();
      int p = 0;
      for (; p + 4 <= k; p += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p), acc);
      double s = hsum(acc);
      for (; p < k; ++p) s += a[p] * b[p];
      c[j] = accumulate ? c[j] + s : s;
    }
  }
}

void gemm_tn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(double) * size_t(m) * size_t(n));
  for (int p = 0; p < k; ++p) {
    const double* a = A + size_t(p) * m;
    const double* b = B + size_t(p) * n;
    for (int i = 0; i < m; ++i) {
      if (a[i] == 0.0) continue;
      fma_row(n, a[i], b, C + size_t(i) * n);
    }
  }
}

double dot(int n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(int n, double a, const double* x, double* y) { fma_row(n, a, x, y); }

void vadd(int n, const double* x, const double* y, double* z) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void vmul(int n, const double* x, const double* y, double* z) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void vscale(int n, double a, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

double reduce_sum(int n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double reduce_max(int n, const double* x) {
  double m = x[0];
  int i = 1;
  if (n >= 5) {
    __m256d mv = _mm256_loadu_pd(x);
    i = 4;
    for (; i + 4 <= n; i += 4) mv = _mm256_max_pd(mv, _mm256_loadu_pd(x + i));
    double lane[4];
    _mm256_storeu_pd(lane, mv);
    m = lane[0];
    for (int l = 1; l < 4; ++l)
      if (lane[l] > m) m = lane[l];
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

}  // namespace tote::kernels::avx2

#endif  // TOTE_KERNELS_AVX2
