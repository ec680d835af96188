#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "afca/models/model.hpp"

namespace afca {

// L1 strength by beta layer kind: linear 0.01, LSTM 0.0016, AF-LSTM 1.2e-6.
double default_l1_lambda(LayerKind kind);

struct TrainConfig {
  double lr = kDefaultLearningRate;
  int epochs = 200;
  int n_batches = 20;
  double l1_lambda = 0.01;
  int early_stop_tolerance = 10;
  int n_seeds = 10;
  std::uint64_t base_seed = 0;

  static TrainConfig defaults_for(LayerKind kind);
  void validate() const;
};

// Epochs are 1-based: train_loss[e-1] belongs to epoch e.
struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int stopped_epoch = 0;
  int best_epoch = 0;

  bool operator==(const TrainHistory&) const = default;
};

std::string history_csv(const TrainHistory& h);
void save_history(const TrainHistory& h, const std::filesystem::path& path);

// MSE over all batch entries plus lambda * sum |W| over weight matrices.
Var_ loss(Graph_& g, Model& model, const Batch& batch, double l1_lambda, NormMode mode = NormMode::Train);
double loss_value(const Model& model, const Batch& batch, double l1_lambda);

// Mean squared reconstruction error over the given rows, eval mode.
double mse(const Model& model, const Dataset& data, std::span<const std::size_t> rows);

// Test seams. val_loss_override replaces the measured validation loss of an
// epoch; on_epoch_end observes the parameters after each epoch.
struct TrainHooks {
  std::function<double(int epoch, double measured)> val_loss_override;
  std::function<void(int epoch, const Model& model)> on_epoch_end;
};

struct TrainResult {
  Model model;  // best-validation snapshot
  TrainHistory history;
};

TrainResult train_one(Model model, const Dataset& data, const TrainConfig& config, std::uint64_t seed,
                      const TrainHooks& hooks = {});

// Members use seeds base_seed .. base_seed + n_seeds - 1 for both
// initialization and shuffling.
EnsembleModel train_ensemble(const ModelSpec& spec, const Dataset& data, const TrainConfig& config,
                             std::vector<TrainHistory>* histories = nullptr);

}  // namespace afca
