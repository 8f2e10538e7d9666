#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dndt/data.hpp"
#include "dndt/model.hpp"
#include "dndt/train.hpp"

namespace dndt::testing {

inline Dataset make_dataset(std::size_t n_features, std::vector<double> values, std::vector<std::size_t> labels,
                            std::size_t n_classes) {
  Dataset d;
  d.n_features = n_features;
  d.n_rows = labels.size();
  d.values = std::move(values);
  d.labels = std::move(labels);
  for (std::size_t f = 0; f < n_features; ++f) d.feature_names.push_back("f" + std::to_string(f));
  for (std::size_t c = 0; c < n_classes; ++c) d.class_names.push_back("c" + std::to_string(c));
  d.categorical.assign(n_features, false);
  d.levels.assign(n_features, {});
  return d;
}

// |a - b| <= rel * max(|a|, |b|) + abs_floor
inline bool close(double a, double b, double rel, double abs_floor = 1e-8) {
  return std::fabs(a - b) <= rel * std::max(std::fabs(a), std::fabs(b)) + abs_floor;
}

// Random model over [0, 1] features with cut points at least `gap` apart.
inline DndtModel random_model(std::mt19937_64& rng, std::vector<std::size_t> cuts, std::size_t classes, double tau,
                              double gap = 1e-3) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DndtModel m;
  for (std::size_t d = 0; d < cuts.size(); ++d) {
    std::vector<double> c;
    while (c.size() < cuts[d]) {
      const double v = unit(rng);
      if (std::all_of(c.begin(), c.end(), [&](double o) { return std::fabs(o - v) >= gap; })) c.push_back(v);
    }
    m.binners.push_back({c, tau});
    m.feature_names.push_back("f" + std::to_string(d));
    m.normalizer.min.push_back(0.0);
    m.normalizer.max.push_back(1.0);
    m.normalizer.constant.push_back(false);
  }
  for (std::size_t c = 0; c < classes; ++c) m.class_names.push_back("c" + std::to_string(c));
  const std::size_t leaves = leaf_count(cuts);
  std::uniform_real_distribution<double> score(-1.0, 1.0);
  m.leaf_scores = Tensor::zeros({leaves, classes});
  for (double& v : m.leaf_scores.values()) v = score(rng);
  return m;
}

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst = 0.0;  // largest |a - b| / (max(|a|,|b|) + 1e-8)
};

// Reverse-mode gradients of the soft cross-entropy against central
// differences of loss(), for every cut point and leaf score.
inline GradientCheck check_model_gradients(DndtModel model, const Dataset& normalized, double step, double rel,
                                           double abs_floor = 1e-8) {
  ad::Graph graph;
  const GraphParams params = bind_parameters(graph, model);
  const Tensor x = Tensor::matrix(normalized.n_rows, normalized.n_features, normalized.values);
  const ad::Var logits = forward_logits(graph, params, x, model.temperature(), BinMode::Soft);
  Tensor targets = Tensor::zeros({normalized.n_rows, model.n_classes()});
  for (std::size_t i = 0; i < normalized.n_rows; ++i) targets.at(i, normalized.labels[i]) = 1.0;
  const ad::Var objective = ad::mul_scalar(
      ad::sum(ad::mul(ad::log_softmax(logits, 1), graph.constant(targets))), -1.0 / static_cast<double>(normalized.n_rows));
  graph.backward(objective);

  GradientCheck out;
  auto compare = [&](double analytic, double& slot) {
    const double saved = slot;
    slot = saved + step;
    const double up = loss(normalized, model);
    slot = saved - step;
    const double down = loss(normalized, model);
    slot = saved;
    const double numeric = (up - down) / (2.0 * step);
    ++out.checked;
    if (!close(analytic, numeric, rel, abs_floor)) ++out.failed;
    out.worst = std::max(out.worst, std::fabs(analytic - numeric) / (std::max(std::fabs(analytic), std::fabs(numeric)) + 1e-8));
  };
  DndtModel& m = model;
  for (std::size_t d = 0; d < m.n_features(); ++d) {
    const Tensor& g = params.cutpoints[d].grad();
    for (std::size_t k = 0; k < m.binners[d].cutpoints.size(); ++k) compare(g[k], m.binners[d].cutpoints[k]);
  }
  const Tensor& gs = params.leaf_scores.grad();
  for (std::size_t i = 0; i < m.leaf_scores.size(); ++i) compare(gs[i], m.leaf_scores[i]);
  return out;
}

}  // namespace dndt::testing
