#include <cstddef>

#include "ffcac/simd/kernels.hpp"

namespace ffcac::simd {
namespace {

#include "gemm_impl.hpp"

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_scalar(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
                 const double* b, double* c, bool accumulate) {
  gemm_loops<dot_scalar, axpy_scalar>(ta, tb, m, n, k, a, b, c, accumulate);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar, gemm_scalar};
  return table;
}

}  // namespace ffcac::simd
