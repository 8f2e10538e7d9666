#pragma once

// Per-row bodies shared by the serial and OpenMP kernels.

#include <cstddef>
#include <span>

#include "dndt/kernels.hpp"

namespace dndt::kernels::detail {

inline void gemm_row(MatrixView a, MatrixView b, double* out_row, std::size_t r, bool accumulate) {
  for (std::size_t c = 0; c < b.cols; ++c) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.cols; ++k) sum += a(r, k) * b(k, c);
    out_row[c] = accumulate ? out_row[c] + sum : sum;
  }
}

inline void row_outer_row(MatrixView a, MatrixView b, double* out_row, std::size_t r) {
  for (std::size_t i = 0; i < a.cols; ++i) {
    const double ai = a(r, i);
    for (std::size_t j = 0; j < b.cols; ++j) out_row[i * b.cols + j] = ai * b(r, j);
  }
}

inline void row_outer_backward_row(MatrixView a, MatrixView b, const double* g_row, double* ga_row, double* gb_row,
                                   std::size_t r) {
  const std::size_t p = a.cols;
  const std::size_t q = b.cols;
  if (ga_row) {
    for (std::size_t i = 0; i < p; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < q; ++j) sum += g_row[i * q + j] * b(r, j);
      ga_row[i] += sum;
    }
  }
  if (gb_row) {
    for (std::size_t j = 0; j < q; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < p; ++i) sum += g_row[i * q + j] * a(r, i);
      gb_row[j] += sum;
    }
  }
}

// Expands the product in place, back to front, so no scratch buffer is needed.
inline void kronecker_row(std::span<const MatrixView> factors, double* out_row, std::size_t r) {
  std::size_t len = 1;
  out_row[0] = 1.0;
  for (const MatrixView& f : factors) {
    const std::size_t q = f.cols;
    for (std::size_t i = len; i-- > 0;) {
      const double v = out_row[i];
      for (std::size_t j = q; j-- > 0;) out_row[i * q + j] = v * f(r, j);
    }
    len *= q;
  }
}

inline std::size_t kronecker_width(std::span<const MatrixView> factors) {
  std::size_t width = 1;
  for (const MatrixView& f : factors) width *= f.cols;
  return width;
}

}  // namespace dndt::kernels::detail
