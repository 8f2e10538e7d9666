#include <doctest.h>

#include "dndt/errors.hpp"
#include "dndt/tensor.hpp"

using namespace dndt;

TEST_CASE("tensor construction validates sizes") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  const Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6.0);
}
