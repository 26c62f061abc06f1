#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orient/datapipe.hpp"
#include "orient/netspec.hpp"

namespace orient {

struct ScheduleEntry {
  std::size_t start_epoch = 0;
  float rate = 0.0F;
  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct TrainConfig {
  float momentum = 0.9F;
  std::size_t batch_size = 256;
  float weight_decay = 5e-4F;
  std::vector<ScheduleEntry> global_lr_schedule{{0, 5e-4F}, {10, 5e-3F}};
  /// Per-layer learning-rate multipliers; layers not listed keep the value
  /// from their LayerSpec.
  std::map<std::string, float> layer_lr;
  std::size_t max_epochs = 30;
  std::size_t plateau_patience = 5;
  /// Validation loss must drop by more than this to count as improvement.
  float plateau_threshold = 1e-4F;
  std::uint64_t seed = 1;
  /// Standard deviation for freshly initialized layers.
  float init_std = 0.01F;
  bool augment = true;
  AugmentParams augment_params{};
  /// Stop as soon as validation accuracy reaches this value (0 disables).
  double stop_at_val_acc = 0.0;

  /// Full-size regime: momentum 0.9, batch 256, decay 5e-4, 5e-4 then 5e-3
  /// from epoch 10, 30 epochs.
  static TrainConfig paper();
  /// Desk-scale defaults for the reduced network on synthetic data.
  static TrainConfig desk();

  /// Throws UsageError describing the first violated constraint.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

std::string to_json(const TrainConfig& config, int indent = 2);
/// Fields missing from `text` keep the values in `base`.
TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base = TrainConfig::paper());

/// Piecewise-constant lookup: rate of the last entry whose start_epoch <= epoch.
float lr_at_epoch(const std::vector<ScheduleEntry>& schedule, std::size_t epoch);

/// v <- momentum * v - lr_eff * (grad + decay * w); w <- w + v, with
/// lr_eff = lr_global * layer multiplier. Frozen layers are skipped.
/// A non-finite gradient throws NumericError naming the layer and batch.
void sgd_step(Network& net, float lr_global, const TrainConfig& config, std::size_t batch_index = 0);

struct EpochRecord {
  std::size_t epoch = 0;
  float lr = 0.0F;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  /// Parameters from the epoch with the lowest validation loss.
  Checkpoint best;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
  bool stopped_on_plateau = false;
  bool reached_target = false;
  /// Parameters after the last completed epoch.
  ParameterSet final_params;
};

/// Header `epoch,lr,train_loss,val_loss,val_acc`, one row per epoch.
std::string history_csv(const std::vector<EpochRecord>& history);

/// First epoch (1-based count of completed epochs) whose validation accuracy
/// reached `threshold`, if any.
std::optional<std::size_t> epochs_to_reach(const std::vector<EpochRecord>& history, double threshold);

class TrainingAbortedError : public NumericError {
 public:
  TrainingAbortedError(const std::string& what, std::optional<Checkpoint> last_good)
      : NumericError(what), last_good_(std::move(last_good)) {}
  [[nodiscard]] const std::optional<Checkpoint>& last_good() const { return last_good_; }

 private:
  std::optional<Checkpoint> last_good_;
};

/// Shuffled mini-batch SGD over `train_set` (augmented), validated on
/// `val_set` after each epoch. Mean RGB is computed from `train_set`.
TrainResult train(Network& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config);

/// Assembles a mean-subtracted batch from dataset samples.
Tensor make_batch(const Dataset& dataset, std::span<const std::size_t> indices, const std::array<float, 3>& mean_rgb,
                  std::size_t side);

/// Spec copy with every layer trainable (used when pre-training a trunk).
NetworkSpec unfrozen(NetworkSpec spec);

/// Target-network parameters taking every conv layer from `base` (matched
/// by name and shape) and drawing fully connected layers from N(0, std^2).
ParameterSet transfer_trunk(const Checkpoint& base, const NetworkSpec& target, Rng& rng, float std);

/// Loads the conv trunk of `base`, re-initializes the fully connected layers,
/// applies the target spec's freeze flags, then trains.
TrainResult finetune_workflow(const Checkpoint& base, const NetworkSpec& target, const Dataset& train_set,
                              const Dataset& val_set, const TrainConfig& config);

}  // namespace orient
