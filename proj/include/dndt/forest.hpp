#pragma once

// Random-subspace ensemble of DNDTs for data too wide for one Kronecker tree.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dndt/data.hpp"
#include "dndt/model.hpp"
#include "dndt/train.hpp"

namespace dndt {

struct ForestMember {
  std::vector<std::size_t> features;  // ascending indices into the full feature set
  DndtModel model;
  TrainReport report;  // not serialized
};

struct ForestModel {
  std::vector<ForestMember> trees;
  std::size_t subset_size = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t n_trees() const noexcept { return trees.size(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }
};

inline constexpr std::size_t k_default_forest_trees = 10;
inline constexpr std::size_t k_default_subset_size = 10;
// Wider datasets get a forest from the CLI.
inline constexpr std::size_t k_forest_feature_threshold = 12;

// Feature subset for tree `tree`, drawn without replacement from a seed
// derived from (seed, tree).
std::vector<std::size_t> draw_subspace(std::size_t n_features, std::size_t subset_size, std::uint64_t seed,
                                       std::size_t tree);

// Trees train in parallel; each uses config.seed derived per tree, so the
// result is identical to sequential training.
ForestModel fit_forest(const Dataset& train, const TrainConfig& config, std::size_t n_trees = k_default_forest_trees,
                       std::size_t subset_size = k_default_subset_size);

// Hard-route votes of every tree for one raw instance.
std::vector<std::size_t> forest_votes(std::span<const double> raw_x, const ForestModel& forest);
// Most votes wins; ties go to the lowest class index.
std::size_t majority_vote(std::span<const std::size_t> votes, std::size_t n_classes);
std::size_t predict_majority(std::span<const double> raw_x, const ForestModel& forest);
std::vector<std::size_t> predict_forest(const Dataset& raw, const ForestModel& forest);

}  // namespace dndt
