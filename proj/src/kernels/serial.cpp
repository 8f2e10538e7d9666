#include <stdexcept>

#include "dndt/kernels.hpp"
#include "rows.hpp"

namespace dndt::kernels::serial {

void gemm(MatrixView a, MatrixView b, std::span<double> out, bool accumulate) {
  if (a.cols != b.rows || out.size() != a.rows * b.cols) throw std::invalid_argument("gemm: nonconforming operands");
  for (std::size_t r = 0; r < a.rows; ++r) detail::gemm_row(a, b, out.data() + r * b.cols, r, accumulate);
}

void row_outer(MatrixView a, MatrixView b, std::span<double> out) {
  if (a.rows != b.rows || out.size() != a.rows * a.cols * b.cols) throw std::invalid_argument("row_outer: nonconforming operands");
  const std::size_t width = a.cols * b.cols;
  for (std::size_t r = 0; r < a.rows; ++r) detail::row_outer_row(a, b, out.data() + r * width, r);
}

void row_outer_backward(MatrixView a, MatrixView b, std::span<const double> grad_out, std::span<double> grad_a,
                        std::span<double> grad_b) {
  const std::size_t width = a.cols * b.cols;
  for (std::size_t r = 0; r < a.rows; ++r) {
    detail::row_outer_backward_row(a, b, grad_out.data() + r * width, grad_a.empty() ? nullptr : grad_a.data() + r * a.cols,
                                   grad_b.empty() ? nullptr : grad_b.data() + r * b.cols, r);
  }
}

void kronecker_rows(std::span<const MatrixView> factors, std::span<double> out) {
  if (factors.empty()) throw std::invalid_argument("kronecker_rows: no factors");
  const std::size_t rows = factors.front().rows;
  const std::size_t width = detail::kronecker_width(factors);
  if (out.size() != rows * width) throw std::invalid_argument("kronecker_rows: output size mismatch");
  for (std::size_t r = 0; r < rows; ++r) detail::kronecker_row(factors, out.data() + r * width, r);
}

}  // namespace dndt::kernels::serial
