// AArch64 Advanced SIMD variant (NEON is baseline on AArch64).

#include <arm_neon.h>

#include <cstddef>

#include "ffcac/simd/kernels.hpp"

namespace ffcac::simd {
namespace {

#include "gemm_impl.hpp"

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_neon(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c, bool accumulate) {
  gemm_loops<dot_neon, axpy_neon>(ta, tb, m, n, k, a, b, c, accumulate);
}

}  // namespace

namespace detail {
const KernelTable& neon_table() {
  static const KernelTable table{"neon", dot_neon, axpy_neon, gemm_neon};
  return table;
}
}  // namespace detail

}  // namespace ffcac::simd
