#pragma once

// Differentiable binning of one scalar feature into n+1 intervals.
//
// With n sorted cut points b_1 < ... < b_n, the logits for bin i (0-based)
// are (i+1)*x - (b_1 + ... + b_i), and the bin activation is their softmax at
// temperature tau. As tau -> 0 the activation tends to the one-hot vector of
// the interval containing x.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "dndt/autodiff.hpp"

namespace dndt {

using BinActivation = std::vector<double>;

struct SoftBinner {
  std::vector<double> cutpoints;  // trainable, any order
  double temperature = 0.1;

  std::size_t n_cutpoints() const noexcept { return cutpoints.size(); }
  std::size_t n_bins() const noexcept { return cutpoints.size() + 1; }
};

// Constant logit slopes [1, 2, ..., n+1].
std::vector<double> bin_weights(std::size_t n_cutpoints);

// Stable ascending permutation of the cut points.
std::vector<std::size_t> cutpoint_order(std::span<const double> cutpoints);

// Sorted copy of the cut points; exact duplicates are nudged apart by
// 1e-12 * sorted index so the intervals stay well defined.
std::vector<double> prepare_cutpoints(std::span<const double> cutpoints);

// b[0] = 0, b[i] = -(c[0] + ... + c[i-1]). Throws ConfigError on empty input.
std::vector<double> build_bias(std::span<const double> sorted_cutpoints);

// w * x + b for sorted cut points.
std::vector<double> bin_logits(double x, std::span<const double> sorted_cutpoints);

// Softmax((w x + b) / tau) after sorting the binner's cut points.
BinActivation soft_bin(double x, const SoftBinner& binner);

// Number of cut points <= x; a value on a cut point goes to the upper bin.
std::size_t hard_bin(double x, std::span<const double> sorted_cutpoints);

// One-hot sample of argmax(logits / tau + g) with g ~ Gumbel(0, 1).
BinActivation st_gumbel_bin(double x, const SoftBinner& binner, std::mt19937_64& rng);

// Draws one standard Gumbel variate.
double sample_gumbel(std::mt19937_64& rng);

struct TemperatureSchedule {
  double initial = 0.1;
  double decay = 1.0;  // per epoch, in (0, 1]
  double floor = 0.01;

  void validate() const;
};

// max(initial * decay^epoch, floor); throws ConfigError on invalid schedules.
double anneal_temperature(const TemperatureSchedule& schedule, std::size_t epoch);

enum class BinMode { Soft, StGumbel };

// Graph form of the binning layer for a batch.
//   x:         B x 1 feature column
//   cutpoints: 1 x n row (unsorted; sorted here as a fixed permutation)
// Returns B x (n+1) bin activations. StGumbel needs an rng.
ad::Var bin_layer(ad::Var x, ad::Var cutpoints, double temperature, BinMode mode, std::mt19937_64* rng = nullptr);

}  // namespace dndt
