#include "dndt/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "dndt/errors.hpp"
#include "dndt/kernels.hpp"

namespace dndt {
namespace {

std::vector<double> quantiles(std::vector<double> values, std::size_t n) {
  std::sort(values.begin(), values.end());
  std::vector<double> out(n);
  const double last = static_cast<double>(values.size() - 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double h = last * static_cast<double>(k + 1) / static_cast<double>(n + 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    out[k] = values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  }
  return out;
}

void check_input(std::span<const double> x, const DndtModel& model) {
  if (x.size() != model.n_features()) {
    throw ShapeError("model expects " + std::to_string(model.n_features()) + " features, input has " +
                     std::to_string(x.size()));
  }
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

BinActivation feature_activation(double x, const SoftBinner& binner, RouteMode mode, std::mt19937_64* rng) {
  switch (mode) {
    case RouteMode::Soft:
      return soft_bin(x, binner);
    case RouteMode::StGumbel:
      if (!rng) throw ConfigError("route: straight-through Gumbel mode needs an rng");
      return st_gumbel_bin(x, binner, *rng);
    case RouteMode::Hard: {
      BinActivation out(binner.n_bins(), 0.0);
      out[hard_bin(x, prepare_cutpoints(binner.cutpoints))] = 1.0;
      return out;
    }
  }
  return {};
}

}  // namespace

std::size_t leaf_count(std::span<const std::size_t> cutpoints_per_feature) {
  if (cutpoints_per_feature.empty()) throw ConfigError("a tree needs at least one feature");
  std::size_t leaves = 1;
  for (std::size_t n : cutpoints_per_feature) {
    if (n == 0) throw ConfigError("every feature needs at least one cut point");
    if (leaves > k_max_leaves / (n + 1)) {
      throw ConfigError("a single tree over " + std::to_string(cutpoints_per_feature.size()) +
                        " features exceeds 2^20 leaves; train a random-subspace forest instead (--trees/--subset)");
    }
    leaves *= n + 1;
  }
  return leaves;
}

std::size_t DndtModel::leaf_count() const {
  std::vector<std::size_t> counts;
  counts.reserve(binners.size());
  for (const SoftBinner& b : binners) counts.push_back(b.n_cutpoints());
  return dndt::leaf_count(counts);
}

std::size_t leaf_count(const DndtModel& model) { return model.leaf_count(); }

std::vector<std::size_t> DndtModel::strides() const {
  std::vector<std::size_t> s(binners.size(), 1);
  for (std::size_t d = binners.size(); d-- > 1;) s[d - 1] = s[d] * binners[d].n_bins();
  return s;
}

void DndtModel::set_temperature(double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  for (SoftBinner& b : binners) b.temperature = tau;
}

void DndtModel::validate() const {
  if (binners.empty()) throw ConfigError("model needs at least one feature");
  if (class_names.size() < 2) throw ConfigError("model needs at least two classes");
  const std::size_t leaves = leaf_count();
  if (leaf_scores.rank() != 2 || leaf_scores.rows() != leaves || leaf_scores.cols() != n_classes()) {
    throw ShapeError("leaf score matrix has shape " + shape_to_string(leaf_scores.shape()) + ", expected [" +
                     std::to_string(leaves) + ", " + std::to_string(n_classes()) + "]");
  }
  if (feature_names.size() != binners.size() || normalizer.n_features() != binners.size()) {
    throw ShapeError("model feature metadata does not match its " + std::to_string(binners.size()) + " binners");
  }
}

DndtModel initialize_model(const Dataset& normalized_train, const Normalizer& normalizer,
                           std::span<const std::size_t> cutpoints_per_feature, double temperature,
                           std::mt19937_64& rng, CutpointInit init) {
  normalized_train.validate();
  if (cutpoints_per_feature.size() != normalized_train.n_features) {
    throw ConfigError("cut point counts given for " + std::to_string(cutpoints_per_feature.size()) +
                      " features, dataset has " + std::to_string(normalized_train.n_features));
  }
  const std::size_t leaves = leaf_count(cutpoints_per_feature);
  DndtModel model;
  model.feature_names = normalized_train.feature_names;
  model.class_names = normalized_train.class_names;
  model.normalizer = normalizer;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t d = 0; d < normalized_train.n_features; ++d) {
    std::vector<double> cuts;
    if (init == CutpointInit::Quantile) {
      cuts = quantiles(normalized_train.column(d), cutpoints_per_feature[d]);
    } else {
      for (std::size_t k = 0; k < cutpoints_per_feature[d]; ++k) cuts.push_back(unit(rng));
    }
    model.binners.push_back({std::move(cuts), temperature});
  }
  std::uniform_real_distribution<double> score(-0.1, 0.1);
  model.leaf_scores = Tensor::zeros({leaves, model.n_classes()});
  for (double& v : model.leaf_scores.values()) v = score(rng);
  model.set_temperature(temperature);
  return model;
}

DndtModel initialize_model(const Dataset& normalized_train, const Normalizer& normalizer,
                           std::size_t cutpoints_per_feature, double temperature, std::mt19937_64& rng,
                           CutpointInit init) {
  const std::vector<std::size_t> counts(normalized_train.n_features, cutpoints_per_feature);
  return initialize_model(normalized_train, normalizer, counts, temperature, rng, init);
}

std::vector<std::size_t> hard_bins(std::span<const double> normalized, const DndtModel& model) {
  check_input(normalized, model);
  std::vector<std::size_t> bins(model.n_features());
  for (std::size_t d = 0; d < bins.size(); ++d) {
    bins[d] = hard_bin(normalized[d], prepare_cutpoints(model.binners[d].cutpoints));
  }
  return bins;
}

std::size_t hard_leaf(std::span<const double> normalized, const DndtModel& model) {
  const std::vector<std::size_t> bins = hard_bins(normalized, model);
  const std::vector<std::size_t> strides = model.strides();
  std::size_t leaf = 0;
  for (std::size_t d = 0; d < bins.size(); ++d) leaf += bins[d] * strides[d];
  return leaf;
}

LeafRouting route(std::span<const double> normalized, const DndtModel& model, RouteMode mode, std::mt19937_64* rng) {
  check_input(normalized, model);
  std::vector<BinActivation> acts;
  std::vector<kernels::MatrixView> factors;
  acts.reserve(model.n_features());
  for (std::size_t d = 0; d < model.n_features(); ++d) {
    acts.push_back(feature_activation(normalized[d], model.binners[d], mode, rng));
  }
  for (const BinActivation& a : acts) factors.push_back(kernels::MatrixView::dense(a.data(), 1, a.size()));
  LeafRouting z(model.leaf_count());
  kernels::serial::kronecker_rows(factors, z);
  return z;
}

std::vector<double> predict_logits(std::span<const double> normalized, const DndtModel& model, RouteMode mode,
                                   std::mt19937_64* rng) {
  const std::size_t classes = model.n_classes();
  if (mode == RouteMode::Hard) {
    const std::size_t leaf = hard_leaf(normalized, model);
    const auto row = model.leaf_scores.values().subspan(leaf * classes, classes);
    return {row.begin(), row.end()};
  }
  const LeafRouting z = route(normalized, model, mode, rng);
  std::vector<double> logits(classes, 0.0);
  kernels::serial::gemm(kernels::MatrixView::dense(z.data(), 1, z.size()),
                        kernels::MatrixView::dense(model.leaf_scores.values().data(), z.size(), classes), logits);
  return logits;
}

std::size_t predict_class(std::span<const double> normalized, const DndtModel& model, RouteMode mode) {
  return argmax(predict_logits(normalized, model, mode));
}

Tensor route_batch(const Dataset& normalized, const DndtModel& model, RouteMode mode) {
  if (normalized.n_features != model.n_features()) {
    throw ShapeError("route_batch: model expects " + std::to_string(model.n_features()) + " features, dataset has " +
                     std::to_string(normalized.n_features));
  }
  if (mode == RouteMode::StGumbel) throw ConfigError("route_batch: sampling mode is not supported for batches");
  const std::size_t rows = normalized.n_rows;
  std::vector<Tensor> acts;
  for (std::size_t d = 0; d < model.n_features(); ++d) {
    Tensor a = Tensor::zeros({rows, model.binners[d].n_bins()});
    for (std::size_t i = 0; i < rows; ++i) {
      const BinActivation act = feature_activation(normalized.at(i, d), model.binners[d], mode, nullptr);
      std::copy(act.begin(), act.end(), a.values().begin() + static_cast<std::ptrdiff_t>(i * act.size()));
    }
    acts.push_back(std::move(a));
  }
  std::vector<kernels::MatrixView> factors;
  for (const Tensor& a : acts) factors.push_back(kernels::MatrixView::dense(a.values().data(), a.rows(), a.cols()));
  Tensor z = Tensor::zeros({rows, model.leaf_count()});
  kernels::omp::kronecker_rows(factors, z.values());
  return z;
}

std::vector<std::size_t> predict_batch(const Dataset& normalized, const DndtModel& model, RouteMode mode) {
  const std::size_t classes = model.n_classes();
  std::vector<std::size_t> out(normalized.n_rows);
  if (mode == RouteMode::Hard) {
    const auto rows = static_cast<std::int64_t>(normalized.n_rows);
#pragma omp parallel for schedule(static) if (normalized.n_rows >= 1024)
    for (std::int64_t i = 0; i < rows; ++i) {
      const auto r = static_cast<std::size_t>(i);
      const std::size_t leaf = hard_leaf(normalized.row(r), model);
      out[r] = argmax(model.leaf_scores.values().subspan(leaf * classes, classes));
    }
    return out;
  }
  const Tensor z = route_batch(normalized, model, mode);
  Tensor logits = Tensor::zeros({normalized.n_rows, classes});
  kernels::omp::gemm(kernels::MatrixView::dense(z.values().data(), z.rows(), z.cols()),
                     kernels::MatrixView::dense(model.leaf_scores.values().data(), z.cols(), classes),
                     logits.values());
  for (std::size_t i = 0; i < normalized.n_rows; ++i) out[i] = argmax(logits.values().subspan(i * classes, classes));
  return out;
}

std::vector<std::size_t> predict_raw(const Dataset& raw, const DndtModel& model, RouteMode mode) {
  return predict_batch(model.normalizer.apply(raw), model, mode);
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels) {
  if (predicted.size() != labels.size() || labels.empty()) {
    throw ShapeError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

GraphParams bind_parameters(ad::Graph& graph, const DndtModel& model) {
  GraphParams p;
  for (const SoftBinner& b : model.binners) p.cutpoints.push_back(graph.parameter(Tensor::row(b.cutpoints)));
  p.leaf_scores = graph.parameter(model.leaf_scores);
  return p;
}

ad::Var forward_logits(ad::Graph& graph, const GraphParams& params, const Tensor& x, double temperature,
                       BinMode mode, std::mt19937_64* rng) {
  if (x.rank() != 2 || x.cols() != params.cutpoints.size()) {
    throw ShapeError("forward_logits: input shape " + shape_to_string(x.shape()) + " does not match " +
                     std::to_string(params.cutpoints.size()) + " features");
  }
  ad::Var z;
  for (std::size_t d = 0; d < x.cols(); ++d) {
    std::vector<double> col(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x.at(i, d);
    ad::Var act = bin_layer(graph.constant(Tensor::column(std::move(col))), params.cutpoints[d], temperature, mode, rng);
    z = d == 0 ? act : ad::outer_flatten(z, act);
  }
  return ad::matmul(z, params.leaf_scores);
}

namespace {

TreeViewNode build_view(const DndtModel& model, const std::vector<std::vector<double>>& thresholds, std::size_t depth,
                        std::size_t leaf_base, const std::vector<std::size_t>& strides) {
  TreeViewNode node;
  if (depth == model.n_features()) {
    const std::size_t classes = model.n_classes();
    node.is_leaf = true;
    node.leaf_index = leaf_base;
    const auto row = model.leaf_scores.values().subspan(leaf_base * classes, classes);
    node.predicted_class = argmax(row);
    const double hi = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - hi);
    for (double v : row) node.class_distribution.push_back(std::exp(v - hi) / total);
    node.class_counts.assign(classes, 0);
    return node;
  }
  node.feature = depth;
  node.feature_name = model.feature_names[depth];
  node.thresholds = thresholds[depth];
  for (std::size_t bin = 0; bin < model.binners[depth].n_bins(); ++bin) {
    node.children.push_back(build_view(model, thresholds, depth + 1, leaf_base + bin * strides[depth], strides));
  }
  return node;
}

}  // namespace

TreeView to_tree_view(const DndtModel& model, const Dataset& raw) {
  model.validate();
  std::vector<std::vector<double>> thresholds;
  for (std::size_t d = 0; d < model.n_features(); ++d) {
    std::vector<double> t = prepare_cutpoints(model.binners[d].cutpoints);
    for (double& v : t) v = model.normalizer.denormalize(d, v);
    thresholds.push_back(std::move(t));
  }
  TreeView view;
  view.class_names = model.class_names;
  view.n_leaves = model.leaf_count();
  view.root = build_view(model, thresholds, 0, 0, model.strides());
  if (raw.n_features != model.n_features()) {
    throw ShapeError("to_tree_view: model expects " + std::to_string(model.n_features()) + " features, dataset has " +
                     std::to_string(raw.n_features));
  }
  // Tallies follow the normalized hard routing so the view agrees with predictions.
  const Dataset normalized = model.normalizer.apply(raw);
  std::vector<TreeViewNode*> leaves(view.n_leaves, nullptr);
  auto collect = [&](auto&& self, TreeViewNode& n) -> void {
    if (n.is_leaf) {
      leaves[n.leaf_index] = &n;
      return;
    }
    for (TreeViewNode& c : n.children) self(self, c);
  };
  collect(collect, view.root);
  for (std::size_t i = 0; i < normalized.n_rows; ++i) {
    TreeViewNode* leaf = leaves[hard_leaf(normalized.row(i), model)];
    ++leaf->count;
    if (raw.labels[i] < leaf->class_counts.size()) ++leaf->class_counts[raw.labels[i]];
  }
  view.n_instances = normalized.n_rows;
  return view;
}

std::size_t route_tree_view(const TreeView& view, std::span<const double> raw_x) {
  const TreeViewNode* cur = &view.root;
  while (!cur->is_leaf) {
    if (cur->feature >= raw_x.size()) throw ShapeError("route_tree_view: instance has too few features");
    cur = &cur->children[hard_bin(raw_x[cur->feature], cur->thresholds)];
  }
  return cur->leaf_index;
}

}  // namespace dndt
