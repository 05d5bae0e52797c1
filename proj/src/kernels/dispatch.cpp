#include "tote/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace tote::kernels {

namespace {

constexpr Ops kScalarOps = {
    scalar::gemm_nn, scalar::gemm_nt, scalar::gemm_tn, scalar::dot,  scalar::axpy,
    scalar::vadd,    scalar::vmul,    scalar::vscale,  scalar::reduce_sum, scalar::reduce_max,
};

#ifdef TOTE_KERNELS_AVX2
constexpr Ops kAvx2Ops = {
    avx2::gemm_nn, avx2::gemm_nt, avx2::gemm_tn, avx2::dot,  avx2::axpy,
    avx2::vadd,    avx2::vmul,    avx2::vscale,  avx2::reduce_sum, avx2::reduce_max,
};

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

Backend resolve(Backend req) {
  if (req == Backend::Auto) {
    if (const char* env = std::getenv("TOTEVISION_KERNELS")) {
      if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
      if (std::strcmp(env, "avx2") == 0) req = Backend::Avx2;
    }
  }
#ifdef TOTE_KERNELS_AVX2
  if ((req == Backend::Auto || req == Backend::Avx2) && cpu_has_avx2()) return Backend::Avx2;
#endif
  return Backend::Scalar;
}

struct State {
  Backend backend;
  const Ops* ops;
  State() { set(resolve(Backend::Auto)); }
  void set(Backend b) {
    backend = b;
#ifdef TOTE_KERNELS_AVX2
    ops = (b == Backend::Avx2) ? &kAvx2Ops : &kScalarOps;
#else
    ops = &kScalarOps;
#endif
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

Backend set_backend(Backend b) {
  state().set(resolve(b));
  return state().backend;
}

Backend active_backend() { return state().backend; }

const char* backend_name() {
  switch (state().backend) {
    case Backend::Avx2: return "avx2";
    default: return "scalar";
  }
}

const Ops& ops() { return *state().ops; }

}  // namespace tote::kernels
