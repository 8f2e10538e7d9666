#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "dndt/autodiff.hpp"
#include "dndt/errors.hpp"
#include "helpers.hpp"

using namespace dndt;
using dndt::testing::close;

namespace {

// Central differences of f with respect to every entry of `at`.
std::vector<double> numeric_grad(const std::function<double(const Tensor&)>& f, Tensor at, double step = 1e-5) {
  std::vector<double> g(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double saved = at[i];
    at[i] = saved + step;
    const double up = f(at);
    at[i] = saved - step;
    const double down = f(at);
    at[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  ad::Graph g;
  const ad::Var p = ad::softmax(g.constant(Tensor::vector({0, 0, 0})), 0);
  for (double v : p.value().values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("x*x at 3 has gradient 6") {
  ad::Graph g;
  const ad::Var x = g.parameter(Tensor::scalar(3.0));
  const ad::Var y = x * x;
  g.backward(y);
  CHECK(x.grad().item() == 6.0);
}

TEST_CASE("sum of softmax has zero gradient") {
  std::mt19937_64 rng(1);
  ad::Graph g;
  const ad::Var v = g.parameter(random_tensor({5}, rng));
  g.backward(ad::sum(ad::softmax(v, 0)));
  for (double d : v.grad().values()) CHECK(std::fabs(d) < 1e-15);
}

TEST_CASE("softmax cross-entropy gradient at [1,2,3], class 2") {
  auto f = [](const Tensor& z) {
    ad::Graph g;
    const ad::Var lp = ad::log_softmax(g.constant(z), 0);
    return -lp.value()[2];
  };
  ad::Graph g;
  const ad::Var z = g.parameter(Tensor::vector({1, 2, 3}));
  const ad::Var onehot = g.constant(Tensor::vector({0, 0, 1}));
  g.backward(ad::mul_scalar(ad::sum(ad::mul(ad::log_softmax(z, 0), onehot)), -1.0));
  const auto num = numeric_grad(f, Tensor::vector({1, 2, 3}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(close(z.grad()[i], num[i], 1e-6, 0.0));
  // Analytic: softmax - onehot.
  const double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0), s = e1 + e2 + e3;
  CHECK(z.grad()[0] == doctest::Approx(e1 / s).epsilon(1e-12));
  CHECK(z.grad()[2] == doctest::Approx(e3 / s - 1.0).epsilon(1e-12));
}

TEST_CASE("every op matches central differences") {
  std::mt19937_64 rng(7);
  // Each builder maps two 3x4 / 4x2 inputs to a scalar through one op family.
  using Builder = std::function<ad::Var(ad::Graph&, ad::Var, ad::Var)>;
  const std::vector<std::pair<const char*, Builder>> cases = {
      {"add", [](ad::Graph&, ad::Var a, ad::Var) { return ad::sum(ad::mul(ad::add(a, a), a)); }},
      {"mul", [](ad::Graph&, ad::Var a, ad::Var) { return ad::sum(ad::mul(a, ad::mul_scalar(a, 1.5))); }},
      {"matmul", [](ad::Graph&, ad::Var a, ad::Var b) {
         const ad::Var m = ad::matmul(a, b);
         return ad::sum(ad::mul(m, m));
       }},
      {"softmax axis 1", [](ad::Graph& g, ad::Var a, ad::Var) {
         const ad::Var s = ad::softmax(a, 1);
         return ad::sum(ad::mul(s, g.constant(Tensor::matrix(3, 4, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}))));
       }},
      {"softmax axis 0", [](ad::Graph& g, ad::Var a, ad::Var) {
         const ad::Var s = ad::softmax(a, 0);
         return ad::sum(ad::mul(s, g.constant(Tensor::matrix(3, 4, {3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8}))));
       }},
      {"log_softmax", [](ad::Graph& g, ad::Var a, ad::Var) {
         return ad::sum(ad::mul(ad::log_softmax(a, 1), g.constant(Tensor::matrix(3, 4, {1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0}))));
       }},
      {"log", [](ad::Graph&, ad::Var a, ad::Var) { return ad::sum(ad::log(ad::softmax(a, 1))); }},
      {"sum axis", [](ad::Graph&, ad::Var a, ad::Var) {
         const ad::Var r = ad::sum(a, 1);
         const ad::Var c = ad::sum(a, 0);
         return ad::add(ad::sum(ad::mul(r, r)), ad::sum(ad::mul(c, ad::mul(c, c))));
       }},
      {"outer_flatten", [](ad::Graph&, ad::Var a, ad::Var b) {
         const ad::Var o = ad::outer_flatten(a, ad::matmul(a, b));
         return ad::sum(ad::mul(o, o));
       }},
  };
  for (const auto& [name, build] : cases) {
    CAPTURE(name);
    const Tensor a0 = random_tensor({3, 4}, rng);
    const Tensor b0 = random_tensor({4, 2}, rng);
    ad::Graph g;
    const ad::Var a = g.parameter(a0);
    const ad::Var b = g.parameter(b0);
    g.backward(build(g, a, b));
    const auto fa = [&](const Tensor& t) {
      ad::Graph h;
      return build(h, h.parameter(t), h.parameter(b0)).value().item();
    };
    const auto fb = [&](const Tensor& t) {
      ad::Graph h;
      return build(h, h.parameter(a0), h.parameter(t)).value().item();
    };
    const auto na = numeric_grad(fa, a0);
    const auto nb = numeric_grad(fb, b0);
    for (std::size_t i = 0; i < na.size(); ++i) CHECK(close(a.grad()[i], na[i], 1e-6, 1e-9));
    for (std::size_t i = 0; i < nb.size(); ++i) CHECK(close(b.grad()[i], nb[i], 1e-6, 1e-9));
  }
}

TEST_CASE("outer_flatten orders the first operand slowest") {
  ad::Graph g;
  const ad::Var z = ad::outer_flatten(g.constant(Tensor::vector({0.9, 0.1})), g.constant(Tensor::vector({0.2, 0.8})));
  const std::vector<double> expected = {0.18, 0.72, 0.02, 0.08};
  for (std::size_t i = 0; i < 4; ++i) CHECK(z.value()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
}

TEST_CASE("straight-through passes the gradient to the soft branch") {
  ad::Graph g;
  const ad::Var a = g.parameter(Tensor::vector({0.2, 0.5, 0.3}));
  const ad::Var st = ad::straight_through(a, Tensor::vector({0, 1, 0}));
  CHECK(st.value()[1] == 1.0);
  g.backward(ad::sum(ad::mul(st, g.constant(Tensor::vector({1, 2, 3})))));
  CHECK(a.grad()[0] == 1.0);
  CHECK(a.grad()[1] == 2.0);
  CHECK(a.grad()[2] == 3.0);
}

TEST_CASE("gradients from several consumers add up") {
  ad::Graph g;
  const ad::Var x = g.parameter(Tensor::scalar(2.0));
  const ad::Var y = ad::add(ad::mul(x, x), ad::mul_scalar(x, 3.0));
  g.backward(y);
  CHECK(x.grad().item() == 7.0);
}

TEST_CASE("autodiff errors") {
  ad::Graph g;
  const ad::Var m = g.parameter(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  const ad::Var v = g.parameter(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(g.backward(m), ShapeError);
  CHECK_THROWS_AS(ad::add(m, v), ShapeError);
  CHECK_THROWS_AS(ad::matmul(m, m), ShapeError);
  CHECK_THROWS_AS(ad::log(g.constant(Tensor::vector({1.0, 0.0}))), NumericError);
  CHECK_THROWS_AS(ad::softmax(v, 3), ShapeError);
  try {
    ad::matmul(m, m);
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2, 3]") != std::string::npos);
  }
}

TEST_CASE("softmax stays finite for large logits") {
  ad::Graph g;
  const ad::Var p = ad::softmax(g.constant(Tensor::vector({1000.0, 0.0, -1000.0})), 0);
  CHECK(p.value().all_finite());
  CHECK(p.value()[0] == 1.0);
}
