#pragma once

// Loop nest shared by every kernel variant. Include only from inside an
// anonymous namespace of a variant TU so each ISA gets its own copy; the
// including TU provides <cstddef>. No standard-library templates in here: an
// instantiation made in an ISA-flagged TU could be merged into callers that
// run on CPUs without that ISA.

template <double (*Dot)(const double*, const double*, std::size_t),
          void (*Axpy)(double, const double*, double*, std::size_t)>
void gemm_loops(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                const double* a, const double* b, double* c, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  }
  if (!trans_b) {
    // C[i,:] += op(A)[i,p] * B[p,:]
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = trans_a ? a[p * m + i] : a[i * k + p];
        if (aip != 0.0) Axpy(aip, b + p * n, ci, n);
      }
    }
  } else if (!trans_a) {
    // C[i,j] += A[i,:] . B[j,:]
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += Dot(a + i * k, b + j * k, k);
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[j * k + p];
        c[i * n + j] += s;
      }
  }
}
