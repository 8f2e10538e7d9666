#include "dndt/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dndt/errors.hpp"

namespace dndt {
namespace {

using Json = nlohmann::ordered_json;
using Kind = DataError::Kind;

constexpr int k_version = 1;

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(Kind::Parse, std::string("model file is not valid JSON: ") + e.what());
  }
}

void expect_format(const Json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw DataError(Kind::Schema, std::string("expected a '") + format + "' document");
  }
  if (j.value("version", 0) != k_version) {
    throw DataError(Kind::Schema, std::string("unsupported ") + format + " version");
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError(Kind::Schema, std::string("malformed model document: ") + e.what());
  }
}

Json model_json(const DndtModel& model) {
  model.validate();
  Json j;
  j["format"] = "dndt-model";
  j["version"] = k_version;
  j["temperature"] = model.temperature();
  j["classes"] = model.class_names;
  Json features = Json::array();
  for (std::size_t d = 0; d < model.n_features(); ++d) {
    std::vector<double> original;
    for (double c : model.binners[d].cutpoints) original.push_back(model.normalizer.denormalize(d, c));
    features.push_back({{"name", model.feature_names[d]},
                        {"min", model.normalizer.min[d]},
                        {"max", model.normalizer.max[d]},
                        {"constant", static_cast<bool>(model.normalizer.constant[d])},
                        {"cutpoints", model.binners[d].cutpoints},
                        {"cutpoints_original", original}});
  }
  j["features"] = features;
  Json scores = Json::array();
  for (std::size_t r = 0; r < model.leaf_scores.rows(); ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < model.leaf_scores.cols(); ++c) row.push_back(model.leaf_scores.at(r, c));
    scores.push_back(row);
  }
  j["leaf_scores"] = scores;
  return j;
}

DndtModel model_from(const Json& j) {
  expect_format(j, "dndt-model");
  return guarded([&] {
    DndtModel m;
    const double tau = j.at("temperature").get<double>();
    m.class_names = j.at("classes").get<std::vector<std::string>>();
    for (const Json& f : j.at("features")) {
      m.feature_names.push_back(f.at("name").get<std::string>());
      m.normalizer.min.push_back(f.at("min").get<double>());
      m.normalizer.max.push_back(f.at("max").get<double>());
      m.normalizer.constant.push_back(f.at("constant").get<bool>());
      m.binners.push_back({f.at("cutpoints").get<std::vector<double>>(), tau});
    }
    const auto rows = j.at("leaf_scores").get<std::vector<std::vector<double>>>();
    std::vector<double> flat;
    for (const auto& r : rows) {
      if (r.size() != m.class_names.size()) throw DataError(Kind::Schema, "leaf score row has the wrong width");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    m.leaf_scores = Tensor({rows.size(), m.class_names.size()}, std::move(flat));
    try {
      m.validate();
    } catch (const Error& e) {
      throw DataError(Kind::Schema, std::string("inconsistent model document: ") + e.what());
    }
    return m;
  });
}

Json forest_json(const ForestModel& forest) {
  Json j;
  j["format"] = "dndt-forest";
  j["version"] = k_version;
  j["subset_size"] = forest.subset_size;
  j["features"] = forest.feature_names;
  j["classes"] = forest.class_names;
  Json subsets = Json::array();
  Json trees = Json::array();
  for (const ForestMember& m : forest.trees) {
    subsets.push_back(m.features);
    trees.push_back(model_json(m.model));
  }
  j["subsets"] = subsets;
  j["trees"] = trees;
  return j;
}

ForestModel forest_from(const Json& j) {
  expect_format(j, "dndt-forest");
  return guarded([&] {
    ForestModel f;
    f.subset_size = j.at("subset_size").get<std::size_t>();
    f.feature_names = j.at("features").get<std::vector<std::string>>();
    f.class_names = j.at("classes").get<std::vector<std::string>>();
    const auto subsets = j.at("subsets").get<std::vector<std::vector<std::size_t>>>();
    const Json& trees = j.at("trees");
    if (subsets.size() != trees.size()) throw DataError(Kind::Schema, "forest subsets and trees differ in count");
    for (std::size_t t = 0; t < subsets.size(); ++t) {
      for (std::size_t idx : subsets[t]) {
        if (idx >= f.feature_names.size()) throw DataError(Kind::Schema, "forest subset index out of range");
      }
      f.trees.push_back({subsets[t], model_from(trees[t]), {}});
    }
    return f;
  });
}

Json cart_json(const CartTree& tree) {
  Json j;
  j["format"] = "dndt-cart";
  j["version"] = k_version;
  j["features"] = tree.feature_names;
  j["classes"] = tree.class_names;
  Json nodes = Json::array();
  for (const CartNode& n : tree.nodes) {
    Json node{{"leaf", n.is_leaf}, {"gini", n.gini}, {"count", n.count}, {"class_counts", n.class_counts},
              {"predicted", n.predicted_class}};
    if (!n.is_leaf) {
      node["feature"] = n.feature;
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    nodes.push_back(node);
  }
  j["nodes"] = nodes;
  return j;
}

CartTree cart_from(const Json& j) {
  expect_format(j, "dndt-cart");
  return guarded([&] {
    CartTree t;
    t.feature_names = j.at("features").get<std::vector<std::string>>();
    t.class_names = j.at("classes").get<std::vector<std::string>>();
    for (const Json& node : j.at("nodes")) {
      CartNode n;
      n.is_leaf = node.at("leaf").get<bool>();
      n.gini = node.at("gini").get<double>();
      n.count = node.at("count").get<std::size_t>();
      n.class_counts = node.at("class_counts").get<std::vector<std::size_t>>();
      n.predicted_class = node.at("predicted").get<std::size_t>();
      if (!n.is_leaf) {
        n.feature = node.at("feature").get<std::size_t>();
        n.threshold = node.at("threshold").get<double>();
        n.left = node.at("left").get<std::size_t>();
        n.right = node.at("right").get<std::size_t>();
      }
      t.nodes.push_back(std::move(n));
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const CartNode& n = t.nodes[i];
      if (n.is_leaf) continue;
      // Children after parents keeps traversal acyclic.
      if (n.left <= i || n.right <= i || n.left >= t.nodes.size() || n.right >= t.nodes.size() ||
          n.feature >= t.feature_names.size()) {
        throw DataError(Kind::Schema, "cart node " + std::to_string(i) + " has invalid links");
      }
    }
    if (t.nodes.empty()) throw DataError(Kind::Schema, "cart document has no nodes");
    return t;
  });
}

}  // namespace

std::string model_to_json(const DndtModel& model) { return model_json(model).dump(2) + "\n"; }
DndtModel model_from_json(const std::string& text) { return model_from(parse(text)); }

std::string forest_to_json(const ForestModel& forest) { return forest_json(forest).dump(2) + "\n"; }
ForestModel forest_from_json(const std::string& text) { return forest_from(parse(text)); }

std::string cart_to_json(const CartTree& tree) { return cart_json(tree).dump(2) + "\n"; }
CartTree cart_from_json(const std::string& text) { return cart_from(parse(text)); }

AnyModel any_model_from_json(const std::string& text) {
  const Json j = parse(text);
  const std::string format = j.is_object() ? j.value("format", "") : "";
  if (format == "dndt-model") return model_from(j);
  if (format == "dndt-forest") return forest_from(j);
  if (format == "dndt-cart") return cart_from(j);
  throw DataError(Kind::Schema, "unknown model format '" + format + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(Kind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(Kind::Io, "cannot write " + path);
  out << text;
  if (!out) throw DataError(Kind::Io, "failed writing " + path);
}

}  // namespace dndt
