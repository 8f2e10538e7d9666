#pragma once

// Dense inner loops shared by the autodiff engine and batch inference.
//
// Every kernel exists twice: `serial` is the plain reference loop nest and
// `omp` distributes independent output rows over OpenMP threads. Each output
// element is produced by exactly one thread with the same summation order as
// the serial loop, so both variants agree bitwise.

#include <cstddef>
#include <span>

namespace dndt::kernels {

// Strided read-only matrix view. Transposition swaps the strides.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t row_stride = 0;
  std::size_t col_stride = 1;

  static MatrixView dense(const double* data, std::size_t rows, std::size_t cols) {
    return {data, rows, cols, cols, 1};
  }
  MatrixView transposed() const { return {data, cols, rows, col_stride, row_stride}; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * row_stride + c * col_stride]; }
};

// Below this many output elements the omp variants run on the calling thread.
inline constexpr std::size_t k_parallel_threshold = 4096;

namespace serial {

// out (a.rows x b.cols, dense) = a * b, or += when accumulate is set.
void gemm(MatrixView a, MatrixView b, std::span<double> out, bool accumulate = false);

// Row-wise Kronecker product: out[r, i*q + j] = a[r, i] * b[r, j].
void row_outer(MatrixView a, MatrixView b, std::span<double> out);

// Accumulates the gradients of row_outer into grad_a / grad_b (dense).
void row_outer_backward(MatrixView a, MatrixView b, std::span<const double> grad_out, std::span<double> grad_a,
                        std::span<double> grad_b);

// Multi-factor row-wise Kronecker product, first factor slowest-varying.
// Every factor has the same row count; out is rows x prod(cols).
void kronecker_rows(std::span<const MatrixView> factors, std::span<double> out);

}  // namespace serial

namespace omp {

void gemm(MatrixView a, MatrixView b, std::span<double> out, bool accumulate = false);
void row_outer(MatrixView a, MatrixView b, std::span<double> out);
void row_outer_backward(MatrixView a, MatrixView b, std::span<const double> grad_out, std::span<double> grad_a,
                        std::span<double> grad_b);
void kronecker_rows(std::span<const MatrixView> factors, std::span<double> out);

}  // namespace omp

}  // namespace dndt::kernels
