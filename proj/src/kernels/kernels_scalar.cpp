#include "tote/kernels/kernels.hpp"

#include <cstring>

namespace tote::kernels::scalar {

// Loop order i-k-j keeps the C row hot and streams B rows; the AVX2 variant
// uses the same order so accumulation order only differs within a row.
void gemm_nn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(double) * size_t(m) * size_t(n));
  for (int i = 0; i < m; ++i) {
    double* c = C + size_t(i) * n;
    const double* a = A + size_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = a[p];
      if (av == 0.0) continue;
      const double* b = B + size_t(p) * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

void gemm_nt(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* a = A + size_t(i) * k;
    double* c = C + size_t(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* b = B + size_t(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += a[p] * b[p];
      c[j] = accumulate ? c[j] + acc : acc;
    }
  }
}

void gemm_tn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(double) * size_t(m) * size_t(n));
  for (int p = 0; p < k; ++p) {
    const double* a = A + size_t(p) * m;
    const double* b = B + size_t(p) * n;
    for (int i = 0; i < m; ++i) {
      const double av = a[i];
      if (av == 0.0) continue;
      double* c = C + size_t(i) * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

double dot(int n, const double* x, const double* y) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(int n, double a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void vadd(int n, const double* x, const double* y, double* z) {
  for (int i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void vmul(int n, const double* x, const double* y, double* z) {
  for (int i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void vscale(int n, double a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] = a * x[i];
}

double reduce_sum(int n, const double* x) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double reduce_max(int n, const double* x) {
  double m = x[0];
  for (int i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

}  // namespace tote::kernels::scalar
