#include "dndt/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dndt/autodiff.hpp"
#include "dndt/errors.hpp"
#include "dndt/rng.hpp"

namespace dndt {
namespace {

constexpr double k_adam_beta1 = 0.9;
constexpr double k_adam_beta2 = 0.999;
constexpr double k_adam_eps = 1e-8;

Tensor feature_matrix(const Dataset& d) { return Tensor::matrix(d.n_rows, d.n_features, d.values); }

Tensor one_hot(const Dataset& d, std::size_t classes) {
  Tensor t = Tensor::zeros({d.n_rows, classes});
  for (std::size_t i = 0; i < d.n_rows; ++i) {
    if (d.labels[i] >= classes) {
      throw DataError(DataError::Kind::Schema, "label " + std::to_string(d.labels[i]) + " out of range for " +
                                                   std::to_string(classes) + " classes");
    }
    t.at(i, d.labels[i]) = 1.0;
  }
  return t;
}

ad::Var cross_entropy(ad::Var logits, const Tensor& targets) {
  ad::Graph& g = *logits.graph();
  const double scale = -1.0 / static_cast<double>(targets.rows());
  return ad::mul_scalar(ad::sum(ad::mul(ad::log_softmax(logits, 1), g.constant(targets))), scale);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

const char* optimizer_name(Optimizer opt) {
  switch (opt) {
    case Optimizer::Sgd: return "sgd";
    case Optimizer::SgdMomentum: return "sgd-momentum";
    case Optimizer::Adam: return "adam";
  }
  return "?";
}

Optimizer parse_optimizer(const std::string& name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "sgd-momentum" || name == "momentum") return Optimizer::SgdMomentum;
  if (name == "adam") return Optimizer::Adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd, sgd-momentum or adam)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (epochs == 0) throw ConfigError("epoch count must be positive");
  if (cutpoints_per_feature == 0) throw ConfigError("cut points per feature must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  temperature.validate();
}

std::string TrainReport::to_csv() const {
  std::string out = "epoch,loss,train_acc,val_acc,tau\n";
  for (const EpochRecord& r : epochs) {
    out += std::to_string(r.epoch) + "," + format_double(r.loss) + "," + format_double(r.train_accuracy) + ",";
    if (r.validation_accuracy) out += format_double(*r.validation_accuracy);
    out += "," + format_double(r.temperature) + "\n";
  }
  return out;
}

double loss(const Dataset& normalized_batch, const DndtModel& model, RouteMode mode) {
  if (normalized_batch.n_rows == 0) throw DataError(DataError::Kind::Empty, "loss: empty batch");
  if (mode == RouteMode::StGumbel) throw ConfigError("loss: sampling mode is not supported");
  const Tensor targets = one_hot(normalized_batch, model.n_classes());
  if (mode == RouteMode::Hard) {
    // Hard routing selects one leaf row per instance.
    double total = 0.0;
    for (std::size_t i = 0; i < normalized_batch.n_rows; ++i) {
      const std::vector<double> logits = predict_logits(normalized_batch.row(i), model, RouteMode::Hard);
      const double hi = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double v : logits) z += std::exp(v - hi);
      total -= logits[normalized_batch.labels[i]] - hi - std::log(z);
    }
    return total / static_cast<double>(normalized_batch.n_rows);
  }
  ad::Graph graph;
  const GraphParams params = bind_parameters(graph, model);
  const ad::Var logits =
      forward_logits(graph, params, feature_matrix(normalized_batch), model.temperature(), BinMode::Soft);
  return cross_entropy(logits, targets).value().item();
}

Trainer::Trainer(DndtModel& model, const TrainConfig& config)
    : model_(model), config_(config), noise_rng_(derive_seed(config.seed, 0x5eed)) {
  config_.validate();
  model_.validate();
  const std::size_t slots = model_.n_features() + 1;
  first_moment_.resize(slots);
  second_moment_.resize(slots);
  for (std::size_t d = 0; d < model_.n_features(); ++d) {
    first_moment_[d].assign(model_.binners[d].n_cutpoints(), 0.0);
    second_moment_[d].assign(model_.binners[d].n_cutpoints(), 0.0);
  }
  first_moment_.back().assign(model_.leaf_scores.size(), 0.0);
  second_moment_.back().assign(model_.leaf_scores.size(), 0.0);
}

void Trainer::apply(std::vector<double>& param, std::span<const double> grad, std::size_t slot, bool decay) {
  const double lr = config_.learning_rate;
  std::vector<double>& m = first_moment_[slot];
  std::vector<double>& v = second_moment_[slot];
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i] + (decay ? config_.weight_decay * param[i] : 0.0);
    switch (config_.optimizer) {
      case Optimizer::Sgd:
        param[i] -= lr * g;
        break;
      case Optimizer::SgdMomentum:
        m[i] = config_.momentum * m[i] + g;
        param[i] -= lr * m[i];
        break;
      case Optimizer::Adam: {
        m[i] = k_adam_beta1 * m[i] + (1.0 - k_adam_beta1) * g;
        v[i] = k_adam_beta2 * v[i] + (1.0 - k_adam_beta2) * g * g;
        const double t = static_cast<double>(steps_);
        const double m_hat = m[i] / (1.0 - std::pow(k_adam_beta1, t));
        const double v_hat = v[i] / (1.0 - std::pow(k_adam_beta2, t));
        param[i] -= lr * m_hat / (std::sqrt(v_hat) + k_adam_eps);
        break;
      }
    }
  }
}

double Trainer::step(const Dataset& normalized_batch, double temperature) {
  if (normalized_batch.n_rows == 0) throw DataError(DataError::Kind::Empty, "training batch is empty");
  ad::Graph graph;
  const GraphParams params = bind_parameters(graph, model_);
  const BinMode mode = config_.st_gumbel ? BinMode::StGumbel : BinMode::Soft;
  const ad::Var logits =
      forward_logits(graph, params, feature_matrix(normalized_batch), temperature, mode, &noise_rng_);
  const ad::Var objective = cross_entropy(logits, one_hot(normalized_batch, model_.n_classes()));
  const double value = objective.value().item();
  if (!std::isfinite(value)) return value;
  graph.backward(objective);

  ++steps_;
  for (std::size_t d = 0; d < model_.n_features(); ++d) {
    apply(model_.binners[d].cutpoints, params.cutpoints[d].grad().values(), d, false);
  }
  std::vector<double> scores(model_.leaf_scores.values().begin(), model_.leaf_scores.values().end());
  apply(scores, params.leaf_scores.grad().values(), model_.n_features(), true);
  std::copy(scores.begin(), scores.end(), model_.leaf_scores.values().begin());
  return value;
}

FitResult fit(const Dataset& train, const TrainConfig& config, const Dataset* validation) {
  config.validate();
  train.validate();
  const Normalizer normalizer = Normalizer::fit(train);
  const Dataset normalized = normalizer.apply(train);
  std::optional<Dataset> normalized_val;
  if (validation) normalized_val = normalizer.apply(*validation);

  std::mt19937_64 init_rng(derive_seed(config.seed, 1));
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, 2));
  FitResult result{initialize_model(normalized, normalizer, config.cutpoints_per_feature,
                                    config.temperature.initial, init_rng, config.cutpoint_init),
                   {}};
  DndtModel& model = result.model;
  Trainer trainer(model, config);

  std::vector<std::size_t> order(normalized.n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double tau = anneal_temperature(config.temperature, epoch);
    model.set_temperature(tau);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const double batch_loss = trainer.step(subset_rows(normalized, rows), tau);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      }
      weighted += batch_loss * static_cast<double>(rows.size());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = weighted / static_cast<double>(order.size());
    rec.temperature = tau;
    rec.train_accuracy = accuracy(predict_batch(normalized, model), normalized.labels);
    if (normalized_val) rec.validation_accuracy = accuracy(predict_batch(*normalized_val, model), normalized_val->labels);
    result.report.epochs.push_back(rec);
  }
  return result;
}

}  // namespace dndt
