#include <omp.h>

#include <cstdint>
#include <stdexcept>

#include "dndt/kernels.hpp"
#include "rows.hpp"

namespace dndt::kernels::omp {

void gemm(MatrixView a, MatrixView b, std::span<double> out, bool accumulate) {
  if (a.cols != b.rows || out.size() != a.rows * b.cols) throw std::invalid_argument("gemm: nonconforming operands");
  const auto rows = static_cast<std::int64_t>(a.rows);
  const bool big = a.rows * b.cols * (a.cols + 1) >= k_parallel_threshold;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t r = 0; r < rows; ++r) {
    detail::gemm_row(a, b, out.data() + r * b.cols, static_cast<std::size_t>(r), accumulate);
  }
}

void row_outer(MatrixView a, MatrixView b, std::span<double> out) {
  if (a.rows != b.rows || out.size() != a.rows * a.cols * b.cols) throw std::invalid_argument("row_outer: nonconforming operands");
  const std::size_t width = a.cols * b.cols;
  const auto rows = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static) if (out.size() >= k_parallel_threshold)
  for (std::int64_t r = 0; r < rows; ++r) {
    detail::row_outer_row(a, b, out.data() + r * width, static_cast<std::size_t>(r));
  }
}

void row_outer_backward(MatrixView a, MatrixView b, std::span<const double> grad_out, std::span<double> grad_a,
                        std::span<double> grad_b) {
  const std::size_t width = a.cols * b.cols;
  const auto rows = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static) if (grad_out.size() >= k_parallel_threshold)
  for (std::int64_t r = 0; r < rows; ++r) {
    detail::row_outer_backward_row(a, b, grad_out.data() + r * width,
                                   grad_a.empty() ? nullptr : grad_a.data() + r * a.cols,
                                   grad_b.empty() ? nullptr : grad_b.data() + r * b.cols, static_cast<std::size_t>(r));
  }
}

void kronecker_rows(std::span<const MatrixView> factors, std::span<double> out) {
  if (factors.empty()) throw std::invalid_argument("kronecker_rows: no factors");
  const std::size_t width = detail::kronecker_width(factors);
  const auto rows = static_cast<std::int64_t>(factors.front().rows);
  if (out.size() != factors.front().rows * width) throw std::invalid_argument("kronecker_rows: output size mismatch");
#pragma omp parallel for schedule(static) if (out.size() >= k_parallel_threshold)
  for (std::int64_t r = 0; r < rows; ++r) {
    detail::kronecker_row(factors, out.data() + r * width, static_cast<std::size_t>(r));
  }
}

}  // namespace dndt::kernels::omp
