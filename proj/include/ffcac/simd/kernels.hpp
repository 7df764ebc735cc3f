#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Inner-loop kernels behind all model and classifier arithmetic.
//
// Every variant implements the same contract on contiguous row-major doubles.
// The scalar table is the reference; ISA variants may reorder reductions (and
// use fused multiply-add), so they agree with it to rounding, not bit-for-bit.
// Within one process the selected table is fixed, so results are reproducible.
namespace ffcac::simd {

struct KernelTable {
  const char* name;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // C(m x n) = op(A) * op(B), or C += ... when accumulate is set.
  // op(A) is m x k (A stored k x m when trans_a), op(B) is k x n (B stored n x k
  // when trans_b).
  void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c, bool accumulate);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// All tables usable on this machine, scalar first.
std::vector<const KernelTable*> available_kernels();

// The table used by the library. Chosen on first use: the best available
// variant, unless FFCAC_SIMD=scalar|avx2|neon names another.
const KernelTable& active();

// Switch the active table by name ("scalar", "avx2", "neon", "auto").
// Returns false if that variant is unavailable. Not thread-safe against
// concurrent kernel use.
bool select(std::string_view name);

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                 const double* a, const double* b, double* c, bool accumulate) {
  active().gemm(trans_a, trans_b, m, n, k, a, b, c, accumulate);
}

}  // namespace ffcac::simd
