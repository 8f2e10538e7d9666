#include <doctest.h>

#include <random>

#include "dndt/errors.hpp"
#include "dndt/serialize.hpp"
#include "helpers.hpp"

using namespace dndt;

TEST_CASE("model round trip is exact") {
  const Dataset iris = load_bundled("iris").dataset;
  TrainConfig c;
  c.epochs = 5;
  c.cutpoints_per_feature = 2;
  const DndtModel m = fit(iris, c).model;
  const std::string text = model_to_json(m);
  const DndtModel back = model_from_json(text);
  CHECK(back.leaf_scores == m.leaf_scores);
  for (std::size_t d = 0; d < 4; ++d) CHECK(back.binners[d].cutpoints == m.binners[d].cutpoints);
  CHECK(back.normalizer.min == m.normalizer.min);
  CHECK(back.temperature() == m.temperature());
  CHECK(model_to_json(back) == text);
  CHECK(predict_raw(iris, back) == predict_raw(iris, m));
  CHECK(text.find("\"cutpoints_original\"") != std::string::npos);
}

TEST_CASE("forest and cart round trips") {
  const Dataset iris = load_bundled("iris").dataset;
  TrainConfig c;
  c.epochs = 5;
  const ForestModel f = fit_forest(iris, c, 3, 2);
  const ForestModel fb = forest_from_json(forest_to_json(f));
  CHECK(fb.n_trees() == 3);
  CHECK(fb.trees[1].features == f.trees[1].features);
  CHECK(predict_forest(iris, fb) == predict_forest(iris, f));

  const CartTree t = fit_cart(iris);
  const CartTree tb = cart_from_json(cart_to_json(t));
  CHECK(predict_cart(iris, tb) == predict_cart(iris, t));
  CHECK(cart_to_json(tb) == cart_to_json(t));

  CHECK(std::holds_alternative<ForestModel>(any_model_from_json(forest_to_json(f))));
  CHECK(std::holds_alternative<CartTree>(any_model_from_json(cart_to_json(t))));
}

TEST_CASE("malformed documents") {
  auto kind = [](const std::string& text) {
    try {
      any_model_from_json(text);
    } catch (const DataError& e) {
      return e.kind();
    }
    return DataError::Kind::Io;
  };
  CHECK(kind("{not json") == DataError::Kind::Parse);
  CHECK(kind("{\"format\": \"other\"}") == DataError::Kind::Schema);
  CHECK(kind("{\"format\": \"dndt-model\", \"version\": 2}") == DataError::Kind::Schema);
  CHECK(kind("{\"format\": \"dndt-model\", \"version\": 1}") == DataError::Kind::Schema);
  CHECK(kind("{\"format\": \"dndt-cart\", \"version\": 1, \"features\": [\"a\"], \"classes\": [\"p\"], "
             "\"nodes\": [{\"leaf\": false, \"gini\": 0, \"count\": 1, \"class_counts\": [1], \"predicted\": 0, "
             "\"feature\": 0, \"threshold\": 0, \"left\": 0, \"right\": 0}]}") == DataError::Kind::Schema);
}
