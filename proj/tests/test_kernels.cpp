#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "dndt/kernels.hpp"

using namespace dndt::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("serial gemm matches naive triple loop") {
  std::mt19937_64 rng(3);
  const std::size_t m = 5, k = 7, n = 4;
  const auto a = random_values(m * k, rng), b = random_values(k * n, rng);
  std::vector<double> out(m * n);
  serial::gemm(MatrixView::dense(a.data(), m, k), MatrixView::dense(b.data(), k, n), out);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      CHECK(out[i * n + j] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("omp kernels equal serial kernels bitwise") {
  std::mt19937_64 rng(11);
  // Sizes straddle the parallel threshold.
  for (std::size_t rows : {3u, 64u, 700u}) {
    CAPTURE(rows);
    const std::size_t k = 9, n = 8;
    const auto a = random_values(rows * k, rng), b = random_values(k * n, rng);
    const auto av = MatrixView::dense(a.data(), rows, k), bv = MatrixView::dense(b.data(), k, n);
    std::vector<double> s(rows * n, 0.5), p(rows * n, 0.5);
    serial::gemm(av, bv, s, true);
    omp::gemm(av, bv, p, true);
    CHECK(same_bits(s, p));

    // Transposed operands, as used by the matmul backward pass.
    const auto c = random_values(rows * n, rng);
    const auto cv = MatrixView::dense(c.data(), rows, n);
    std::vector<double> st(k * n), pt(k * n);
    serial::gemm(av.transposed(), cv, st);
    omp::gemm(av.transposed(), cv, pt);
    CHECK(same_bits(st, pt));

    const auto x = random_values(rows * 6, rng), y = random_values(rows * 5, rng);
    const auto xv = MatrixView::dense(x.data(), rows, 6), yv = MatrixView::dense(y.data(), rows, 5);
    std::vector<double> so(rows * 30), po(rows * 30);
    serial::row_outer(xv, yv, so);
    omp::row_outer(xv, yv, po);
    CHECK(same_bits(so, po));

    const auto g = random_values(rows * 30, rng);
    std::vector<double> sa(rows * 6), sb(rows * 5), pa(rows * 6), pb(rows * 5);
    serial::row_outer_backward(xv, yv, g, sa, sb);
    omp::row_outer_backward(xv, yv, g, pa, pb);
    CHECK(same_bits(sa, pa));
    CHECK(same_bits(sb, pb));

    const auto z = random_values(rows * 3, rng);
    const MatrixView factors[] = {xv, yv, MatrixView::dense(z.data(), rows, 3)};
    std::vector<double> sk(rows * 90), pk(rows * 90);
    serial::kronecker_rows(factors, sk);
    omp::kronecker_rows(factors, pk);
    CHECK(same_bits(sk, pk));
  }
}

TEST_CASE("row_outer_backward skips an empty side") {
  const std::vector<double> a = {1, 2}, b = {3, 4, 5}, g = {1, 1, 1, 1, 1, 1};
  std::vector<double> ga(2, 0.0);
  serial::row_outer_backward(MatrixView::dense(a.data(), 1, 2), MatrixView::dense(b.data(), 1, 3), g, ga, {});
  CHECK(ga[0] == 12.0);
  CHECK(ga[1] == 12.0);
}

TEST_CASE("kronecker_rows matches nested loops") {
  const std::vector<double> a = {0.9, 0.1}, b = {0.2, 0.8}, c = {0.5, 0.25, 0.25};
  const MatrixView f[] = {MatrixView::dense(a.data(), 1, 2), MatrixView::dense(b.data(), 1, 2),
                          MatrixView::dense(c.data(), 1, 3)};
  std::vector<double> out(12);
  serial::kronecker_rows(f, out);
  std::size_t idx = 0;
  for (double x : a)
    for (double y : b)
      for (double z : c) CHECK(out[idx++] == doctest::Approx(x * y * z).epsilon(1e-15));
}
