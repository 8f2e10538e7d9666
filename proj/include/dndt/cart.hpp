#pragma once

// Greedy CART baseline: Gini criterion, exhaustive best splitter, no pruning.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dndt/data.hpp"

namespace dndt {

// 1 - sum p_c^2. Throws ConfigError when every count is zero.
double gini(std::span<const std::size_t> class_counts);

struct CartSplit {
  std::size_t feature = 0;
  double threshold = 0.0;       // x <= threshold goes left
  double impurity_decrease = 0.0;  // gini(parent) - weighted child gini
};

// Best split of `rows` over `features`. Candidates are midpoints of
// consecutive distinct values. Equal decreases (compared exactly from the
// integer class counts) go to the lower feature, then the lower threshold.
// Returns nullopt when no candidate lowers the impurity.
std::optional<CartSplit> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                    std::span<const std::size_t> features);
// Single-threaded reference with the same result.
std::optional<CartSplit> best_split_serial(const Dataset& data, std::span<const std::size_t> rows,
                                           std::span<const std::size_t> features);

inline constexpr std::size_t k_no_child = static_cast<std::size_t>(-1);

struct CartNode {
  bool is_leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = k_no_child;  // indices into CartTree::nodes
  std::size_t right = k_no_child;
  double gini = 0.0;
  std::size_t count = 0;
  std::vector<std::size_t> class_counts;
  std::size_t predicted_class = 0;  // majority; ties to the lowest index
};

struct CartTree {
  std::vector<CartNode> nodes;  // nodes[0] is the root
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t n_features() const noexcept { return feature_names.size(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }
  std::size_t depth() const;
  std::size_t n_leaves() const;
};

// Grows until nodes are pure, cannot be split, or reach max_depth (root is
// depth 0). Throws DataError on an empty dataset.
CartTree fit_cart(const Dataset& data, std::optional<std::size_t> max_depth = std::nullopt);
std::size_t predict_cart(std::span<const double> x, const CartTree& tree);
std::vector<std::size_t> predict_cart(const Dataset& data, const CartTree& tree);

struct GiniImportance {
  std::vector<double> values;  // sums to 1 unless trivial
  bool trivial = false;        // single-leaf tree: all zeros, unnormalized
};

GiniImportance gini_importance(const CartTree& tree);

std::string to_dot(const CartTree& tree);

}  // namespace dndt
