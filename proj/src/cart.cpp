#include "dndt/cart.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>

#include "dndt/dot.hpp"
#include "dndt/errors.hpp"

namespace dndt {
namespace {

using Wide = unsigned __int128;

// Weighted child impurity is minimized by maximizing
//   sum_c L_c^2 / n_L + sum_c R_c^2 / n_R,
// which is kept as an exact fraction num / den.
struct Score {
  Wide num = 0;
  Wide den = 1;
};

bool greater(const Score& a, const Score& b) { return a.num * b.den > b.num * a.den; }

std::uint64_t sum_squares(std::span<const std::size_t> counts) {
  std::uint64_t s = 0;
  for (std::size_t c : counts) s += static_cast<std::uint64_t>(c) * c;
  return s;
}

double gini_from(std::uint64_t sq, std::size_t n) {
  const double total = static_cast<double>(n);
  return 1.0 - static_cast<double>(sq) / (total * total);
}

struct Candidate {
  CartSplit split;
  Score score;
};

std::optional<Candidate> best_for_feature(const Dataset& data, std::span<const std::size_t> rows, std::size_t feature,
                                          std::size_t n_classes) {
  std::vector<std::size_t> sorted(rows.begin(), rows.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](std::size_t a, std::size_t b) { return data.at(a, feature) < data.at(b, feature); });
  std::vector<std::size_t> left(n_classes, 0), right(n_classes, 0);
  for (std::size_t r : sorted) ++right[data.labels[r]];
  const std::size_t n = sorted.size();
  std::optional<Candidate> best;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t label = data.labels[sorted[i]];
    ++left[label];
    --right[label];
    const double lo = data.at(sorted[i], feature);
    const double hi = data.at(sorted[i + 1], feature);
    if (!(lo < hi)) continue;
    const std::size_t n_left = i + 1;
    const std::size_t n_right = n - n_left;
    Score s;
    s.num = Wide{sum_squares(left)} * n_right + Wide{sum_squares(right)} * n_left;
    s.den = Wide{n_left} * n_right;
    if (best && !greater(s, best->score)) continue;  // equal keeps the lower threshold
    double threshold = lo + (hi - lo) / 2.0;
    if (threshold >= hi) threshold = lo;  // rounding must not move hi to the left side
    best = Candidate{{feature, threshold, 0.0}, s};
  }
  return best;
}

void check_rows(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError(DataError::Kind::Empty, "best_split: no samples");
  for (std::size_t r : rows) {
    if (r >= data.n_rows) throw ShapeError("best_split: row index out of range");
  }
}

std::vector<std::size_t> class_counts(const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<std::size_t> counts(data.n_classes(), 0);
  for (std::size_t r : rows) ++counts[data.labels[r]];
  return counts;
}

// Reduces per-feature winners in feature order, then checks that the winner
// beats the parent.
std::optional<CartSplit> finish(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const std::optional<Candidate>> per_feature) {
  const std::optional<Candidate>* best = nullptr;
  for (const auto& c : per_feature) {
    if (c && (!best || greater(c->score, (*best)->score))) best = &c;
  }
  if (!best) return std::nullopt;
  const std::vector<std::size_t> counts = class_counts(data, rows);
  const std::size_t n = rows.size();
  const Score parent{Wide{sum_squares(counts)}, Wide{n}};
  if (!greater((*best)->score, parent)) return std::nullopt;
  CartSplit split = (*best)->split;
  const double weighted_child =
      1.0 - static_cast<double>((*best)->score.num) / static_cast<double>((*best)->score.den) / static_cast<double>(n);
  split.impurity_decrease = gini_from(sum_squares(counts), n) - weighted_child;
  return split;
}

}  // namespace

double gini(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw ConfigError("gini: class counts are all zero");
  return gini_from(sum_squares(counts), total);
}

std::optional<CartSplit> best_split_serial(const Dataset& data, std::span<const std::size_t> rows,
                                           std::span<const std::size_t> features) {
  check_rows(data, rows);
  std::vector<std::optional<Candidate>> per_feature;
  for (std::size_t f : features) per_feature.push_back(best_for_feature(data, rows, f, data.n_classes()));
  return finish(data, rows, per_feature);
}

std::optional<CartSplit> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                    std::span<const std::size_t> features) {
  check_rows(data, rows);
  std::vector<std::optional<Candidate>> per_feature(features.size());
  const auto count = static_cast<std::int64_t>(features.size());
  const std::size_t classes = data.n_classes();
#pragma omp parallel for schedule(dynamic) if (rows.size() * features.size() >= 4096)
  for (std::int64_t i = 0; i < count; ++i) {
    per_feature[static_cast<std::size_t>(i)] = best_for_feature(data, rows, features[static_cast<std::size_t>(i)], classes);
  }
  return finish(data, rows, per_feature);
}

std::size_t CartTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf) {
      level[nodes[i].left] = level[i] + 1;
      level[nodes[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

std::size_t CartTree::n_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const CartNode& n) { return n.is_leaf; }));
}

CartTree fit_cart(const Dataset& data, std::optional<std::size_t> max_depth) {
  if (data.n_rows == 0) throw DataError(DataError::Kind::Empty, "fit_cart: dataset is empty");
  data.validate();
  CartTree tree;
  tree.feature_names = data.feature_names;
  tree.class_names = data.class_names;
  std::vector<std::size_t> features(data.n_features);
  std::iota(features.begin(), features.end(), std::size_t{0});

  struct Pending {
    std::size_t node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  std::vector<std::size_t> all(data.n_rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  tree.nodes.emplace_back();
  std::vector<Pending> stack;
  stack.push_back({0, std::move(all), 0});
  // Children are appended in preorder (left subtree before right).
  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    CartNode& node = tree.nodes[job.node];
    node.class_counts = class_counts(data, job.rows);
    node.count = job.rows.size();
    node.gini = gini(node.class_counts);
    node.predicted_class = static_cast<std::size_t>(
        std::max_element(node.class_counts.begin(), node.class_counts.end()) - node.class_counts.begin());
    if (node.gini == 0.0 || job.rows.size() < 2 || (max_depth && job.depth >= *max_depth)) continue;
    const std::optional<CartSplit> split = best_split(data, job.rows, features);
    if (!split) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : job.rows) {
      (data.at(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    const std::size_t left = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    CartNode& parent = tree.nodes[job.node];  // re-fetch after growth
    parent.is_leaf = false;
    parent.feature = split->feature;
    parent.threshold = split->threshold;
    parent.left = left;
    parent.right = left + 1;
    stack.push_back({left + 1, std::move(right_rows), job.depth + 1});
    stack.push_back({left, std::move(left_rows), job.depth + 1});
  }
  return tree;
}

std::size_t predict_cart(std::span<const double> x, const CartTree& tree) {
  if (tree.nodes.empty()) throw ConfigError("predict_cart: tree is empty");
  if (x.size() != tree.n_features()) {
    throw ShapeError("predict_cart: expected " + std::to_string(tree.n_features()) + " features, got " +
                     std::to_string(x.size()));
  }
  std::size_t at = 0;
  while (!tree.nodes[at].is_leaf) {
    const CartNode& n = tree.nodes[at];
    at = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[at].predicted_class;
}

std::vector<std::size_t> predict_cart(const Dataset& data, const CartTree& tree) {
  std::vector<std::size_t> out(data.n_rows);
  for (std::size_t i = 0; i < data.n_rows; ++i) out[i] = predict_cart(data.row(i), tree);
  return out;
}

GiniImportance gini_importance(const CartTree& tree) {
  GiniImportance result;
  result.values.assign(tree.n_features(), 0.0);
  if (tree.nodes.empty()) {
    result.trivial = true;
    return result;
  }
  const double total = static_cast<double>(tree.nodes[0].count);
  for (const CartNode& n : tree.nodes) {
    if (n.is_leaf) continue;
    const CartNode& l = tree.nodes[n.left];
    const CartNode& r = tree.nodes[n.right];
    const double decrease = (static_cast<double>(n.count) * n.gini - static_cast<double>(l.count) * l.gini -
                             static_cast<double>(r.count) * r.gini) /
                            total;
    result.values.at(n.feature) += std::max(decrease, 0.0);
  }
  const double sum = std::accumulate(result.values.begin(), result.values.end(), 0.0);
  if (!(sum > 0.0)) {
    result.trivial = true;
    return result;
  }
  for (double& v : result.values) v /= sum;
  return result;
}

std::string to_dot(const CartTree& tree) {
  DotWriter dot("cart");
  if (tree.nodes.empty()) return dot.str();
  auto counts_text = [](const CartNode& n) {
    std::string s = "n = " + std::to_string(n.count) + " [";
    for (std::size_t c = 0; c < n.class_counts.size(); ++c) {
      if (c) s += ", ";
      s += std::to_string(n.class_counts[c]);
    }
    return s + "]";
  };
  auto gini_text = [](double g) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", g);
    return std::string(buf);
  };
  std::vector<std::size_t> ids(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const CartNode& n = tree.nodes[i];
    if (n.is_leaf) {
      const std::string cls =
          n.predicted_class < tree.class_names.size() ? tree.class_names[n.predicted_class] : std::to_string(n.predicted_class);
      ids[i] = dot.add_leaf(cls + "\n" + counts_text(n));
    } else {
      const std::string name =
          n.feature < tree.feature_names.size() ? tree.feature_names[n.feature] : "x" + std::to_string(n.feature);
      ids[i] = dot.add_internal(name + "\ngini = " + gini_text(n.gini) + "\n" + counts_text(n));
    }
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const CartNode& n = tree.nodes[i];
    if (n.is_leaf) continue;
    dot.add_edge(ids[i], ids[n.left], "<= " + format_threshold(n.threshold));
    dot.add_edge(ids[i], ids[n.right], "> " + format_threshold(n.threshold));
  }
  return dot.str();
}

}  // namespace dndt
