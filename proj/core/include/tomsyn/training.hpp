#pragma once

#include <string>
#include <vector>

#include "tomsyn/dataset.hpp"
#include "tomsyn/neural/optim.hpp"
#include "tomsyn/observer.hpp"

namespace tomsyn {

struct TrainConfig {
  double base_lr = 5e-4;  // midpoint of the swept 0.00015..0.001 range
  int batch_size = 32;
  int max_epochs = 200;
  int early_stop_patience = 20;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  LossWeights weights;
  std::vector<int> milestones = {30, 60, 80, 160};
  double lr_gamma = 0.5;
  neural::AdamConfig adam;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  PerHeadLoss train;
  double val_total = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;       // epoch whose weights the model ends up with
  double best_val = 0.0;
  int stopped_epoch = 0;    // 0 when the run used all max_epochs
};

// Validation takes the last `val_fraction` of episodes of every map, so the
// split preserves the map distribution. Indices refer to dataset rows.
struct Split {
  std::vector<int> train;
  std::vector<int> val;
};
Split split_by_episode(const Dataset& ds, double val_fraction);

// Adam + step-decay schedule + early stopping on validation total loss;
// the model is left holding the best-validation weights. Bit-deterministic
// in (model state, ds, cfg). NaN losses abort with NumericalError.
TrainHistory train(ObserverModel<float>& model, const Dataset& ds,
                   const TrainConfig& cfg);

// Same loop at a constant learning rate (no schedule restart), for brief
// re-training of an already-trained model on a small dataset.
TrainHistory finetune(ObserverModel<float>& model, const Dataset& ds,
                      const TrainConfig& cfg);

struct Accuracy {
  int n = 0;
  int target_correct = 0;       // restricted 4-way choice
  int target_cell_correct = 0;  // unrestricted 121-way argmax, diagnostic
  int action_correct = 0;
  int state_correct = 0;

  double target_rate() const { return n ? static_cast<double>(target_correct) / n : 0.0; }
  double target_cell_rate() const { return n ? static_cast<double>(target_cell_correct) / n : 0.0; }
  double action_rate() const { return n ? static_cast<double>(action_correct) / n : 0.0; }
  double state_rate() const { return n ? static_cast<double>(state_correct) / n : 0.0; }
};

// Eval-mode accuracy over the whole dataset or a subset of row indices.
Accuracy evaluate(ObserverModel<float>& model, const Dataset& ds,
                  const std::vector<int>* indices = nullptr,
                  int batch_size = 256);

// One record per epoch: epoch, lr, weighted total, CE target/action/state,
// KL belief, validation total. Bit-exact round-trip.
void save_history(const std::string& path, const TrainHistory& history);
TrainHistory load_history(const std::string& path);

}  // namespace tomsyn
