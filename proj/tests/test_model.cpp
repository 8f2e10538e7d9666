#include <doctest.h>

#include <cmath>
#include <random>

#include "dndt/dot.hpp"
#include "dndt/errors.hpp"
#include "dndt/model.hpp"
#include "helpers.hpp"

using namespace dndt;
using dndt::testing::make_dataset;
using dndt::testing::random_model;

TEST_CASE("leaf_count examples and guard") {
  CHECK(leaf_count(std::vector<std::size_t>{1, 1, 1, 1}) == 16);
  CHECK(leaf_count(std::vector<std::size_t>{2, 3}) == 12);
  CHECK(leaf_count(std::vector<std::size_t>(10, 1)) == 1024);
  CHECK(leaf_count(std::vector<std::size_t>(20, 1)) == k_max_leaves);
  try {
    leaf_count(std::vector<std::size_t>(21, 1));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("forest") != std::string::npos);
  }
}

TEST_CASE("route with two features") {
  // Binners chosen so the soft activations at tau -> 0 are one-hot.
  std::mt19937_64 rng(1);
  DndtModel m = random_model(rng, {1, 1}, 2, 1e-4);
  m.binners[0].cutpoints = {0.5};
  m.binners[1].cutpoints = {0.5};
  const LeafRouting z = route(std::vector<double>{0.1, 0.9}, m, RouteMode::Soft);
  const std::vector<double> expected = {0, 1, 0, 0};
  for (std::size_t i = 0; i < 4; ++i) CHECK(z[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  CHECK(hard_leaf(std::vector<double>{0.1, 0.9}, m) == 1);
  CHECK(hard_leaf(std::vector<double>{0.9, 0.1}, m) == 2);
  CHECK_THROWS_AS(route(std::vector<double>{0.1}, m, RouteMode::Soft), ShapeError);
}

TEST_CASE("predict_logits is the routed mix of leaf rows") {
  std::mt19937_64 rng(2);
  DndtModel m = random_model(rng, {1}, 2, 1.0);
  m.leaf_scores = Tensor::matrix(2, 2, {1, 0, 0, 1});
  // x on the cut point with tau large enough: both bins weigh 0.5 when
  // the two logits tie, i.e. x = cut point.
  m.binners[0].cutpoints = {0.5};
  const std::vector<double> logits = predict_logits(std::vector<double>{0.5}, m, RouteMode::Soft);
  CHECK(logits[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(logits[1] == doctest::Approx(0.5).epsilon(1e-15));

  const std::vector<double> hard = predict_logits(std::vector<double>{0.9}, m, RouteMode::Hard);
  CHECK(hard == std::vector<double>{0.0, 1.0});

  DndtModel r = random_model(rng, {1, 1}, 3, 0.3);
  const std::vector<double> x = {0.3, 0.7};
  const LeafRouting z = route(x, r, RouteMode::Soft);
  const std::vector<double> got = predict_logits(x, r, RouteMode::Soft);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < 4; ++j) s += z[j] * r.leaf_scores.at(j, c);
    CHECK(got[c] == doctest::Approx(s).epsilon(1e-14));
  }
}

TEST_CASE("soft routing approaches hard routing as tau shrinks") {
  std::mt19937_64 rng(4);
  DndtModel m = random_model(rng, {2, 1, 3}, 2, 1e-5, 0.05);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x = {u(rng), u(rng), u(rng)};
    bool near = false;
    for (std::size_t d = 0; d < 3; ++d)
      for (double c : m.binners[d].cutpoints) near |= std::fabs(c - x[d]) < 0.01;
    if (near) continue;
    const LeafRouting soft = route(x, m, RouteMode::Soft);
    const LeafRouting hard = route(x, m, RouteMode::Hard);
    for (std::size_t j = 0; j < soft.size(); ++j) CHECK(std::fabs(soft[j] - hard[j]) < 1e-9);
  }
}

TEST_CASE("batch routing equals per-row routing") {
  std::mt19937_64 rng(6);
  const DndtModel m = random_model(rng, {2, 2}, 3, 0.2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 20; ++i) {
    values.push_back(u(rng));
    values.push_back(u(rng));
    labels.push_back(static_cast<std::size_t>(i % 3));
  }
  const Dataset d = make_dataset(2, values, labels, 3);
  const Tensor z = route_batch(d, m, RouteMode::Soft);
  const auto pred = predict_batch(d, m);
  for (std::size_t i = 0; i < d.n_rows; ++i) {
    const LeafRouting zi = route(d.row(i), m, RouteMode::Soft);
    for (std::size_t j = 0; j < zi.size(); ++j) CHECK(z.at(i, j) == doctest::Approx(zi[j]).epsilon(1e-15));
    CHECK(pred[i] == predict_class(d.row(i), m));
  }
}

TEST_CASE("graph forward equals direct prediction") {
  std::mt19937_64 rng(8);
  const DndtModel m = random_model(rng, {1, 2}, 2, 0.3);
  const Dataset d = make_dataset(2, {0.1, 0.2, 0.5, 0.9, 0.8, 0.4}, {0, 1, 0}, 2);
  ad::Graph g;
  const GraphParams p = bind_parameters(g, m);
  const ad::Var logits = forward_logits(g, p, Tensor::matrix(3, 2, d.values), 0.3, BinMode::Soft);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto ref = predict_logits(d.row(i), m, RouteMode::Soft);
    for (std::size_t c = 0; c < 2; ++c) CHECK(logits.value().at(i, c) == doctest::Approx(ref[c]).epsilon(1e-13));
  }
}

TEST_CASE("full loss gradients on a 4-instance toy set") {
  std::mt19937_64 rng(10);
  const DndtModel m = random_model(rng, {2, 1}, 3, 1.0);
  const Dataset d = make_dataset(2, {0.1, 0.8, 0.4, 0.3, 0.7, 0.6, 0.95, 0.05}, {0, 1, 2, 1}, 3);
  const auto check = dndt::testing::check_model_gradients(m, d, 1e-5, 1e-4);
  CHECK(check.checked == 3 + 6 * 3);
  CHECK(check.failed == 0);
}

TEST_CASE("quantile initialization starts every cut point active") {
  const Dataset d = make_dataset(1, {0.0, 0.2, 0.4, 0.6, 1.0}, {0, 0, 1, 1, 1}, 2);
  std::mt19937_64 rng(0);
  const DndtModel one = initialize_model(d, Normalizer::fit(d), 1, 0.1, rng);
  CHECK(one.binners[0].cutpoints == std::vector<double>{0.4});  // median
  const DndtModel three = initialize_model(d, Normalizer::fit(d), 3, 0.1, rng);
  const std::vector<double> q = three.binners[0].cutpoints;
  CHECK(q[0] == doctest::Approx(0.2));
  CHECK(q[1] == doctest::Approx(0.4));
  CHECK(q[2] == doctest::Approx(0.6));
  for (double v : one.leaf_scores.values()) CHECK(std::fabs(v) <= 0.1);
  CHECK(one.leaf_count() == 2);
}

TEST_CASE("tree view shape and routing") {
  std::mt19937_64 rng(12);
  DndtModel single = random_model(rng, {1}, 2, 0.1);
  single.binners[0].cutpoints = {0.5};
  const Dataset empty = make_dataset(1, {}, {}, 2);
  const TreeView v1 = to_tree_view(single, empty);
  CHECK_FALSE(v1.root.is_leaf);
  CHECK(v1.root.children.size() == 2);
  CHECK(v1.root.children[0].is_leaf);
  CHECK(v1.n_leaves == 2);

  DndtModel two = random_model(rng, {1, 1}, 2, 0.1);
  two.normalizer.min = {0.0, 10.0};
  two.normalizer.max = {2.0, 20.0};
  const TreeView v2 = to_tree_view(two, make_dataset(2, {}, {}, 2));
  CHECK(v2.n_leaves == 4);
  CHECK(v2.root.children[1].children[1].is_leaf);
  CHECK(v2.root.thresholds[0] == doctest::Approx(two.binners[0].cutpoints[0] * 2.0));
  CHECK(v2.root.children[0].thresholds[0] == doctest::Approx(10.0 + 10.0 * two.binners[1].cutpoints[0]));

  // Routing in original units equals normalized hard routing, including
  // values outside the fitted range.
  std::uniform_real_distribution<double> a(-1.0, 3.0), b(5.0, 25.0);
  std::vector<double> raw;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 200; ++i) {
    raw.push_back(a(rng));
    raw.push_back(b(rng));
    labels.push_back(static_cast<std::size_t>(i % 2));
  }
  const Dataset data = make_dataset(2, raw, labels, 2);
  const TreeView counted = to_tree_view(two, data);
  std::size_t total = 0;
  for (const auto& c0 : counted.root.children)
    for (const auto& c1 : c0.children) total += c1.count;
  CHECK(total == 200);
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    CHECK(route_tree_view(counted, data.row(i)) == hard_leaf(two.normalizer.normalize_row(data.row(i)), two));
  }
}

TEST_CASE("tree view DOT export") {
  std::mt19937_64 rng(14);
  DndtModel m = random_model(rng, {1, 1}, 2, 0.1);
  m.feature_names = {"petal \"length\"", "width"};
  const std::string dot = to_dot(to_tree_view(m, make_dataset(2, {0.1, 0.1, 0.9, 0.9}, {0, 1}, 2)));
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(dot.find("petal \\\"length\\\"") != std::string::npos);
  CHECK(std::count(dot.begin(), dot.end(), '{') == 1);
  CHECK(std::count(dot.begin(), dot.end(), '}') == 1);
  CHECK(dot.find("shape=ellipse") != std::string::npos);
  CHECK(dot.find("n = 1 [") != std::string::npos);
  std::size_t edges = 0;
  for (std::size_t p = dot.find("->"); p != std::string::npos; p = dot.find("->", p + 1)) ++edges;
  CHECK(edges == 6);
}
