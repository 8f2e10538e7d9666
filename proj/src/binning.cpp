#include "dndt/binning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dndt/errors.hpp"

namespace dndt {
namespace {

constexpr double k_duplicate_nudge = 1e-12;

void check_temperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("temperature must be positive, got " + std::to_string(tau));
}

BinActivation softmax_scaled(std::span<const double> logits, double tau) {
  BinActivation out(logits.size());
  double hi = logits[0];
  for (double v : logits) hi = std::max(hi, v);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - hi) / tau);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

// Additive offsets that prepare_cutpoints applies to the sorted values.
std::vector<double> duplicate_offsets(std::span<const double> sorted_raw) {
  std::vector<double> offsets(sorted_raw.size(), 0.0);
  for (std::size_t k = 1; k < sorted_raw.size(); ++k) {
    if (sorted_raw[k] == sorted_raw[k - 1]) offsets[k] = k_duplicate_nudge * static_cast<double>(k);
  }
  return offsets;
}

}  // namespace

std::vector<double> bin_weights(std::size_t n_cutpoints) {
  std::vector<double> w(n_cutpoints + 1);
  std::iota(w.begin(), w.end(), 1.0);
  return w;
}

std::vector<std::size_t> cutpoint_order(std::span<const double> cutpoints) {
  std::vector<std::size_t> order(cutpoints.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cutpoints[a] < cutpoints[b]; });
  return order;
}

std::vector<double> prepare_cutpoints(std::span<const double> cutpoints) {
  std::vector<double> sorted(cutpoints.begin(), cutpoints.end());
  std::stable_sort(sorted.begin(), sorted.end());
  const std::vector<double> offsets = duplicate_offsets(sorted);
  for (std::size_t k = 0; k < sorted.size(); ++k) sorted[k] += offsets[k];
  return sorted;
}

std::vector<double> build_bias(std::span<const double> sorted_cutpoints) {
  if (sorted_cutpoints.empty()) throw ConfigError("build_bias: at least one cut point is required");
  std::vector<double> b(sorted_cutpoints.size() + 1, 0.0);
  for (std::size_t i = 1; i < b.size(); ++i) b[i] = b[i - 1] - sorted_cutpoints[i - 1];
  return b;
}

std::vector<double> bin_logits(double x, std::span<const double> sorted_cutpoints) {
  std::vector<double> logits = build_bias(sorted_cutpoints);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += static_cast<double>(i + 1) * x;
  return logits;
}

BinActivation soft_bin(double x, const SoftBinner& binner) {
  check_temperature(binner.temperature);
  const std::vector<double> sorted = prepare_cutpoints(binner.cutpoints);
  return softmax_scaled(bin_logits(x, sorted), binner.temperature);
}

std::size_t hard_bin(double x, std::span<const double> sorted_cutpoints) {
  return static_cast<std::size_t>(std::upper_bound(sorted_cutpoints.begin(), sorted_cutpoints.end(), x) -
                                  sorted_cutpoints.begin());
}

double sample_gumbel(std::mt19937_64& rng) {
  // u in (0, 1): the open interval keeps both logs finite.
  double u = std::generate_canonical<double, 53>(rng);
  if (u <= 0.0) u = std::numeric_limits<double>::min();
  return -std::log(-std::log(u));
}

BinActivation st_gumbel_bin(double x, const SoftBinner& binner, std::mt19937_64& rng) {
  check_temperature(binner.temperature);
  const std::vector<double> logits = bin_logits(x, prepare_cutpoints(binner.cutpoints));
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double v = logits[i] / binner.temperature + sample_gumbel(rng);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  BinActivation out(logits.size(), 0.0);
  out[best] = 1.0;
  return out;
}

void TemperatureSchedule::validate() const {
  if (!(initial > 0.0) || !std::isfinite(initial)) throw ConfigError("temperature schedule: initial tau must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("temperature schedule: decay must lie in (0, 1]");
  if (!(floor > 0.0)) throw ConfigError("temperature schedule: floor must be positive");
  if (floor > initial) throw ConfigError("temperature schedule: floor exceeds the initial temperature");
}

double anneal_temperature(const TemperatureSchedule& schedule, std::size_t epoch) {
  schedule.validate();
  const double tau = schedule.initial * std::pow(schedule.decay, static_cast<double>(epoch));
  return std::max(tau, schedule.floor);
}

ad::Var bin_layer(ad::Var x, ad::Var cutpoints, double temperature, BinMode mode, std::mt19937_64* rng) {
  check_temperature(temperature);
  ad::Graph& graph = *x.graph();
  const Tensor& xv = x.value();
  const Tensor& cv = cutpoints.value();
  if (xv.rank() != 2 || xv.cols() != 1 || cv.rank() != 2 || cv.rows() != 1 || cv.cols() == 0) {
    throw ShapeError("bin_layer: expected B x 1 input and 1 x n cut points, got " + shape_to_string(xv.shape()) +
                     " and " + shape_to_string(cv.shape()));
  }
  const std::size_t batch = xv.rows();
  const std::size_t n = cv.cols();
  const std::size_t bins = n + 1;

  // bias = cutpoints * routing, with routing[order[k]][i] = -1 for i > k:
  // the sort enters as a fixed permutation, so gradients flow to the
  // original (unsorted) positions.
  const std::vector<std::size_t> order = cutpoint_order(cv.values());
  Tensor routing = Tensor::zeros({n, bins});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = k + 1; i < bins; ++i) routing.at(order[k], i) = -1.0;

  std::vector<double> sorted_raw(n);
  for (std::size_t k = 0; k < n; ++k) sorted_raw[k] = cv[order[k]];
  const std::vector<double> offsets = duplicate_offsets(sorted_raw);
  std::vector<double> nudge(bins, 0.0);
  for (std::size_t i = 1; i < bins; ++i) nudge[i] = nudge[i - 1] - offsets[i - 1];

  ad::Var bias = ad::matmul(cutpoints, graph.constant(std::move(routing)));
  if (std::any_of(offsets.begin(), offsets.end(), [](double v) { return v != 0.0; })) {
    bias = ad::add(bias, graph.constant(Tensor::row(nudge)));
  }
  ad::Var slope = ad::matmul(x, graph.constant(Tensor::row(bin_weights(n))));
  ad::Var offset = ad::matmul(graph.constant(Tensor::filled({batch, 1}, 1.0)), bias);
  ad::Var scaled = ad::mul_scalar(ad::add(slope, offset), 1.0 / temperature);

  if (mode == BinMode::Soft) return ad::softmax(scaled, 1);

  if (!rng) throw ConfigError("bin_layer: straight-through Gumbel mode needs an rng");
  Tensor noise = Tensor::zeros({batch, bins});
  for (double& g : noise.values()) g = sample_gumbel(*rng);
  ad::Var perturbed = ad::add(scaled, graph.constant(std::move(noise)));
  ad::Var relaxed = ad::softmax(perturbed, 1);
  const Tensor& pv = perturbed.value();
  Tensor hard = Tensor::zeros({batch, bins});
  for (std::size_t r = 0; r < batch; ++r) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < bins; ++i)
      if (pv.at(r, i) > pv.at(r, best)) best = i;
    hard.at(r, best) = 1.0;
  }
  return ad::straight_through(relaxed, std::move(hard));
}

}  // namespace dndt
