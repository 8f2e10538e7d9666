#pragma once

// Mini-batch training of every DNDT parameter (cut points and leaf scores)
// against softmax cross-entropy, all updated from one backward pass.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dndt/binning.hpp"
#include "dndt/data.hpp"
#include "dndt/model.hpp"

namespace dndt {

enum class Optimizer { Sgd, SgdMomentum, Adam };

const char* optimizer_name(Optimizer opt);
Optimizer parse_optimizer(const std::string& name);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  Optimizer optimizer = Optimizer::Adam;
  double momentum = 0.9;      // sgd-momentum only
  double weight_decay = 0.001;  // L2 on leaf scores only
  TemperatureSchedule temperature{0.1, 0.99, 0.01};
  bool st_gumbel = false;
  std::uint64_t seed = 0;
  std::size_t cutpoints_per_feature = 1;
  CutpointInit cutpoint_init = CutpointInit::Quantile;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> validation_accuracy;
  double temperature = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;

  // Header "epoch,loss,train_acc,val_acc,tau"; val_acc is empty without a
  // validation set.
  std::string to_csv() const;
};

struct FitResult {
  DndtModel model;
  TrainReport report;
};

// Mean softmax cross-entropy of a labelled batch of normalized rows.
double loss(const Dataset& normalized_batch, const DndtModel& model, RouteMode mode = RouteMode::Soft);

// Owns the optimizer state for one model. Single-threaded.
class Trainer {
 public:
  Trainer(DndtModel& model, const TrainConfig& config);

  // One forward/backward pass and parameter update on a normalized batch.
  // Returns the batch loss before the update.
  double step(const Dataset& normalized_batch, double temperature);

 private:
  void apply(std::vector<double>& param, std::span<const double> grad, std::size_t slot, bool decay);

  DndtModel& model_;
  TrainConfig config_;
  std::mt19937_64 noise_rng_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  std::size_t steps_ = 0;
};

// Fits normalization on `train`, initializes from config.seed and trains for
// config.epochs. Throws NumericError naming the epoch if the loss diverges.
FitResult fit(const Dataset& train, const TrainConfig& config, const Dataset* validation = nullptr);

}  // namespace dndt
