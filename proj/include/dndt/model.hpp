#pragma once

// A deep neural decision tree: one soft binner per feature, leaves formed by
// the Kronecker product of the per-feature bin activations, and a linear
// classifier (one score row per leaf).
//
// Leaf indexing is row-major with feature 0 slowest-varying:
//   leaf = sum_d bin_d * stride_d,  stride_d = prod_{d' > d} (n_d' + 1).
//
// Functions taking a feature vector or a Dataset named `normalized` expect
// values already mapped through the model's Normalizer; the *_raw helpers
// apply it first.

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dndt/autodiff.hpp"
#include "dndt/binning.hpp"
#include "dndt/data.hpp"
#include "dndt/tensor.hpp"

namespace dndt {

// Single trees beyond this many leaves must be trained as a forest.
inline constexpr std::size_t k_max_leaves = std::size_t{1} << 20;

enum class RouteMode { Soft, Hard, StGumbel };

using LeafRouting = std::vector<double>;

struct DndtModel {
  std::vector<SoftBinner> binners;
  Tensor leaf_scores;  // leaf_count() x n_classes()
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  Normalizer normalizer;

  std::size_t n_features() const noexcept { return binners.size(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }
  std::size_t leaf_count() const;
  std::vector<std::size_t> strides() const;
  double temperature() const { return binners.at(0).temperature; }
  void set_temperature(double tau);

  // Throws ShapeError / ConfigError when the invariants are broken.
  void validate() const;
};

// prod (n_d + 1); throws ConfigError past k_max_leaves.
std::size_t leaf_count(std::span<const std::size_t> cutpoints_per_feature);
std::size_t leaf_count(const DndtModel& model);

enum class CutpointInit {
  Quantile,  // equally spaced quantiles of each normalized training column
  Uniform,   // independent draws from U(0, 1)
};

// Leaf scores start uniform in [-0.1, 0.1].
DndtModel initialize_model(const Dataset& normalized_train, const Normalizer& normalizer,
                           std::span<const std::size_t> cutpoints_per_feature, double temperature,
                           std::mt19937_64& rng, CutpointInit init = CutpointInit::Quantile);
DndtModel initialize_model(const Dataset& normalized_train, const Normalizer& normalizer,
                           std::size_t cutpoints_per_feature, double temperature, std::mt19937_64& rng,
                           CutpointInit init = CutpointInit::Quantile);

// Per-feature hard bins and the resulting leaf index.
std::vector<std::size_t> hard_bins(std::span<const double> normalized, const DndtModel& model);
std::size_t hard_leaf(std::span<const double> normalized, const DndtModel& model);

// z = f_1(x_1) (x) ... (x) f_D(x_D). StGumbel requires an rng.
LeafRouting route(std::span<const double> normalized, const DndtModel& model, RouteMode mode,
                  std::mt19937_64* rng = nullptr);

// z^T * leaf_scores.
std::vector<double> predict_logits(std::span<const double> normalized, const DndtModel& model,
                                   RouteMode mode = RouteMode::Hard, std::mt19937_64* rng = nullptr);
std::size_t predict_class(std::span<const double> normalized, const DndtModel& model,
                          RouteMode mode = RouteMode::Hard);

// Batch forms over every row; parallel over rows.
Tensor route_batch(const Dataset& normalized, const DndtModel& model, RouteMode mode = RouteMode::Soft);
std::vector<std::size_t> predict_batch(const Dataset& normalized, const DndtModel& model,
                                       RouteMode mode = RouteMode::Hard);
std::vector<std::size_t> predict_raw(const Dataset& raw, const DndtModel& model, RouteMode mode = RouteMode::Hard);
double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);

// Trainable graph leaves for one forward pass.
struct GraphParams {
  std::vector<ad::Var> cutpoints;  // 1 x n_d each
  ad::Var leaf_scores;
};

GraphParams bind_parameters(ad::Graph& graph, const DndtModel& model);

// Batch logits (B x C) for normalized rows `x` (B x D).
ad::Var forward_logits(ad::Graph& graph, const GraphParams& params, const Tensor& x, double temperature,
                       BinMode mode, std::mt19937_64* rng = nullptr);

// Decision-tree rendering: one level per feature, in input order.
struct TreeViewNode {
  bool is_leaf = false;
  // Internal nodes.
  std::size_t feature = 0;
  std::string feature_name;
  std::vector<double> thresholds;  // ascending, original units
  std::vector<TreeViewNode> children;
  // Leaves.
  std::size_t leaf_index = 0;
  std::size_t predicted_class = 0;
  std::vector<double> class_distribution;  // softmax of the leaf score row
  std::size_t count = 0;
  std::vector<std::size_t> class_counts;
};

struct TreeView {
  TreeViewNode root;
  std::vector<std::string> class_names;
  std::size_t n_leaves = 0;
  std::size_t n_instances = 0;
};

// Leaf counts are hard-routed tallies of `raw`.
TreeView to_tree_view(const DndtModel& model, const Dataset& raw);
// Follows thresholds (x == threshold goes to the upper child); returns the leaf index.
std::size_t route_tree_view(const TreeView& view, std::span<const double> raw_x);

}  // namespace dndt
