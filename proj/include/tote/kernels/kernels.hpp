#pragma once

// Double-precision arithmetic kernels behind the tensor ops. Every kernel has
// a scalar reference implementation and may have ISA-specific variants; the
// active variant is picked once at startup from cpuid and can be overridden
// with set_backend() or the TOTEVISION_KERNELS env var ("scalar", "avx2").
// Variants are equivalence-tested against the scalar reference.

#include <cstddef>

namespace tote::kernels {

enum class Backend { Auto, Scalar, Avx2 };

// Returns the backend actually in use after resolution.
Backend set_backend(Backend b);
Backend active_backend();
const char* backend_name();

struct Ops {
  // C[m,n] (+)= A[m,k] * B[k,n], row-major, contiguous.
  void (*gemm_nn)(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
  // C[m,n] (+)= A[m,k] * B[n,k]^T
  void (*gemm_nt)(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
  // C[m,n] (+)= A[k,m]^T * B[k,n]
  void (*gemm_tn)(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
  double (*dot)(int n, const double* x, const double* y);
  void (*axpy)(int n, double a, const double* x, double* y);        // y += a*x
  void (*vadd)(int n, const double* x, const double* y, double* z); // z = x+y
  void (*vmul)(int n, const double* x, const double* y, double* z); // z = x*y
  void (*vscale)(int n, double a, const double* x, double* y);      // y = a*x
  double (*reduce_sum)(int n, const double* x);
  double (*reduce_max)(int n, const double* x);                     // n >= 1
};

const Ops& ops();

// Scalar reference implementations, always available (used by equivalence
// tests as the ground truth).
namespace scalar {
void gemm_nn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
void gemm_nt(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
void gemm_tn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
double dot(int n, const double* x, const double* y);
void axpy(int n, double a, const double* x, double* y);
void vadd(int n, const double* x, const double* y, double* z);
void vmul(int n, const double* x, const double* y, double* z);
void vscale(int n, double a, const double* x, double* y);
double reduce_sum(int n, const double* x);
double reduce_max(int n, const double* x);
}  // namespace scalar

#ifdef TOTE_KERNELS_AVX2
namespace avx2 {
void gemm_nn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
void gemm_nt(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
void gemm_tn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
double dot(int n, const double* x, const double* y);
void axpy(int n, double a, const double* x, double* y);
void vadd(int n, const double* x, const double* y, double* z);
void vmul(int n, const double* x, const double* y, double* z);
void vscale(int n, double a, const double* x, double* y);
double reduce_sum(int n, const double* x);
double reduce_max(int n, const double* x);
}  // namespace avx2
#endif

}  // namespace tote::kernels
