#pragma once

// Interpretability analyses: active cut points, ignored features, repeated-run
// DNDT importance, CART importance ranking and Kendall's tau between rankings.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dndt/cart.hpp"
#include "dndt/data.hpp"
#include "dndt/model.hpp"
#include "dndt/train.hpp"

namespace dndt {

struct ActiveCutpoints {
  std::vector<std::size_t> active;  // per feature
  std::vector<std::size_t> total;   // cut points per feature
  std::vector<double> fraction;     // active / total

  std::size_t total_active() const;
  std::size_t total_cutpoints() const;
  double overall_fraction() const;
};

// A cut point b is active when some instance has x < b and another x >= b
// (the hard_bin boundary convention). `normalized` must be in the model's
// normalized space. Throws DataError on an empty dataset.
ActiveCutpoints active_cutpoints(const DndtModel& model, const Dataset& normalized);
// True where every cut point of the feature is inactive.
std::vector<bool> ignored_features(const DndtModel& model, const Dataset& normalized);
std::vector<bool> ignored_features(const ActiveCutpoints& active);

// Run r uses seed config.seed + r for both its stratified split and its fit.
struct RunProtocol {
  std::size_t n_runs = 10;
  double train_fraction = 0.8;
};

struct RunResult {
  std::uint64_t seed = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  ActiveCutpoints active;  // on the run's training split
  std::vector<bool> ignored;
};

// Runs are independent and execute in parallel; results are in run order and
// identical to a sequential execution.
std::vector<RunResult> repeated_runs(const Dataset& data, const TrainConfig& config, const RunProtocol& protocol);

struct DndtImportance {
  std::vector<double> ignore_rate;  // percent of runs, per feature
  std::vector<std::size_t> ranking;  // most important first
};

// Ranking: ascending ignore rate, ties to the lower feature index.
DndtImportance dndt_importance(std::span<const RunResult> runs, std::size_t n_features);
DndtImportance dndt_importance(const Dataset& data, const TrainConfig& config, std::size_t n_runs = 10);

// Descending importance, ties to the lower feature index.
std::vector<std::size_t> rank_descending(std::span<const double> importance);
std::vector<std::size_t> cart_ranking(const CartTree& tree);

// Tau-a between two orderings of the same items 0..n-1 (each list names the
// items from first to last). Throws ConfigError on a length mismatch, n < 2
// or lists that are not permutations.
double kendall_tau(std::span<const std::size_t> rank_a, std::span<const std::size_t> rank_b);

struct SweepPoint {
  std::size_t cutpoints = 0;
  double mean_active_fraction = 0.0;
  double mean_train_accuracy = 0.0;
  double mean_test_accuracy = 0.0;
};

// Repeated runs for every cut-point count in `counts`.
std::vector<SweepPoint> cutpoint_sweep(const Dataset& data, const TrainConfig& config,
                                       std::span<const std::size_t> counts, const RunProtocol& protocol);

struct AnalysisReport {
  std::vector<std::string> feature_names;
  std::optional<ActiveCutpoints> active;
  std::vector<bool> ignored;
  std::vector<double> ignore_rate;
  std::vector<std::size_t> dndt_ranking;
  std::vector<double> cart_importance;
  std::vector<std::size_t> cart_ranking;
  std::optional<double> kendall_tau;
  std::vector<SweepPoint> sweep;

  std::string to_json() const;
  // One row per feature.
  std::string features_csv() const;
  // One row per sweep point.
  std::string sweep_csv() const;
};

}  // namespace dndt
