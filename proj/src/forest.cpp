#include "dndt/forest.hpp"

#include <algorithm>
#include <cstdint>
#include <exception>
#include <numeric>
#include <random>

#include "dndt/errors.hpp"
#include "dndt/rng.hpp"

namespace dndt {

std::vector<std::size_t> draw_subspace(std::size_t n_features, std::size_t subset_size, std::uint64_t seed,
                                       std::size_t tree) {
  if (subset_size == 0 || subset_size > n_features) {
    throw ConfigError("subset size " + std::to_string(subset_size) + " must lie in [1, " + std::to_string(n_features) +
                      "]");
  }
  std::vector<std::size_t> all(n_features);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, 1000 + tree));
  // Partial Fisher-Yates: the first subset_size slots are a uniform draw.
  for (std::size_t i = 0; i < subset_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_features - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(subset_size);
  std::sort(all.begin(), all.end());
  return all;
}

ForestModel fit_forest(const Dataset& train, const TrainConfig& config, std::size_t n_trees, std::size_t subset_size) {
  train.validate();
  config.validate();
  if (n_trees == 0) throw ConfigError("a forest needs at least one tree");
  if (subset_size > train.n_features) {
    throw ConfigError("subset size " + std::to_string(subset_size) + " exceeds the " +
                      std::to_string(train.n_features) + " available features");
  }
  ForestModel forest;
  forest.subset_size = subset_size;
  forest.feature_names = train.feature_names;
  forest.class_names = train.class_names;
  forest.trees.resize(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    forest.trees[t].features = draw_subspace(train.n_features, subset_size, config.seed, t);
  }

  std::vector<std::exception_ptr> errors(n_trees);
  const auto count = static_cast<std::int64_t>(n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto t = static_cast<std::size_t>(i);
    try {
      TrainConfig tree_config = config;
      tree_config.seed = derive_seed(config.seed, 2000 + t);
      const Dataset view = select_features(train, forest.trees[t].features);
      FitResult fitted = fit(view, tree_config);
      forest.trees[t].model = std::move(fitted.model);
      forest.trees[t].report = std::move(fitted.report);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return forest;
}

std::vector<std::size_t> forest_votes(std::span<const double> raw_x, const ForestModel& forest) {
  std::vector<std::size_t> votes;
  votes.reserve(forest.n_trees());
  std::vector<double> projected;
  for (const ForestMember& m : forest.trees) {
    projected.clear();
    for (std::size_t f : m.features) {
      if (f >= raw_x.size()) throw ShapeError("forest: instance has fewer features than the forest expects");
      projected.push_back(raw_x[f]);
    }
    votes.push_back(predict_class(m.model.normalizer.normalize_row(projected), m.model));
  }
  return votes;
}

std::size_t majority_vote(std::span<const std::size_t> votes, std::size_t n_classes) {
  std::vector<std::size_t> tally(n_classes, 0);
  for (std::size_t v : votes) {
    if (v >= n_classes) throw ShapeError("majority_vote: class " + std::to_string(v) + " out of range");
    ++tally[v];
  }
  // max_element returns the first maximum, i.e. the lowest class index.
  return static_cast<std::size_t>(std::max_element(tally.begin(), tally.end()) - tally.begin());
}

std::size_t predict_majority(std::span<const double> raw_x, const ForestModel& forest) {
  return majority_vote(forest_votes(raw_x, forest), forest.n_classes());
}

std::vector<std::size_t> predict_forest(const Dataset& raw, const ForestModel& forest) {
  std::vector<std::vector<std::size_t>> per_tree;
  for (const ForestMember& m : forest.trees) {
    per_tree.push_back(predict_raw(select_features(raw, m.features), m.model));
  }
  std::vector<std::size_t> out(raw.n_rows);
  std::vector<std::size_t> votes(forest.n_trees());
  for (std::size_t i = 0; i < raw.n_rows; ++i) {
    for (std::size_t t = 0; t < per_tree.size(); ++t) votes[t] = per_tree[t][i];
    out[i] = majority_vote(votes, forest.n_classes());
  }
  return out;
}

}  // namespace dndt
