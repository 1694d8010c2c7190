// Copyright 2026 The gatspoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GATSPOOF_TRAINING_HPP
#define GATSPOOF_TRAINING_HPP

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "gatspoof/features.hpp"
#include "gatspoof/metrics.hpp"
#include "gatspoof/systems.hpp"

namespace gatspoof {

/// Optimization hyperparameters; precision of the model is chosen by
/// the Trainer/SpoofSystem template argument.
struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-4;
  /// Classical L2: wd * theta is added to the gradient. The decoupled
  /// variant subtracts lr * wd * theta after the Adam step instead.
  bool decoupled_weight_decay = false;
  std::size_t batch_size = 64;
  std::size_t epochs = 300;
  std::uint64_t seed = 1;
  /// Frequency-mask augmentation (train batches only). Width is drawn
  /// uniformly from {0, ..., mask_max_width}; 0 disables masking.
  std::size_t mask_max_width = 12;
  /// Masked bands are filled with 0 when set, otherwise with the
  /// per-utterance feature mean computed before masking.
  bool mask_fill_zero = false;
};

/// Adam with bias correction. Gradients must be finite; a non-finite
/// gradient aborts with the parameter's name.
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer(ParamStore<T>& store, const TrainConfig& cfg);

  void step();
  std::uint64_t step_count() const { return t_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  ParamStore<T>* store_;
  double lr_, weight_decay_;
  bool decoupled_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

/// One utterance ready for training or scoring.
struct TrainItem {
  std::string utt_id;
  FeatureMap features;
  bool bonafide = false;
  std::string attack_id = "-";
};

/// Joins cached features with protocol labels, in protocol order.
std::vector<TrainItem> make_train_items(
    const std::vector<CachedFeatures>& cache,
    const std::vector<TrialRecord>& protocol);

/// One frequency-mask draw, recorded per training step for tests.
struct MaskEvent {
  std::size_t step = 0;
  FreqMask mask;
  std::size_t batch_items = 0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_eer = 0.0;
  double dev_min_tdcf = 0.0;
};

/// Mini-batch training loop: seeded reshuffle each epoch, one mask
/// draw per batch, binary cross-entropy on logits, Adam updates.
template <typename T>
class Trainer {
 public:
  Trainer(SpoofSystem<T>& system, const TrainConfig& cfg);

  /// Runs up to max_steps mini-batches, reshuffling at epoch
  /// boundaries. step_cb (if set) receives (step index, batch loss)
  /// after each update and may return false to stop early.
  /// Returns the number of steps taken.
  std::size_t run_steps(const std::vector<TrainItem>& train,
                        std::size_t max_steps,
                        const std::function<bool(std::size_t, double)>&
                            step_cb = {});

  /// One full pass in epoch order; returns the item-weighted mean loss.
  double run_epoch(const std::vector<TrainItem>& train);

  /// Eval-mode logits, no augmentation, item order preserved.
  std::vector<double> score(const std::vector<TrainItem>& items);

  const std::vector<MaskEvent>& mask_events() const { return mask_events_; }
  AdamOptimizer<T>& optimizer() { return opt_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  ad::Tensor<T> assemble_batch(const std::vector<TrainItem>& items,
                               const std::vector<std::size_t>& order,
                               std::size_t begin, std::size_t end,
                               bool augment);
  void check_items(const std::vector<TrainItem>& items) const;

  SpoofSystem<T>* system_;
  TrainConfig cfg_;
  AdamOptimizer<T> opt_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;  // next index within order_
  std::vector<MaskEvent> mask_events_;
};

struct TrainOutcome {
  std::vector<EpochStats> log;
  std::size_t best_epoch = 0;  // 1-based; 0 if no epoch ran
  double best_dev_eer = 0.0;
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;
};

/// Full training run: per-epoch dev metrics, best-dev-EER checkpoint
/// (ties keep the earlier epoch), and a CSV log
/// "epoch,train_loss,dev_eer,dev_min_tdcf" under out_dir. Progress and
/// the train/dev class ratios go to `log` when non-null.
template <typename T>
TrainOutcome train_full(SpoofSystem<T>& system, const TrainConfig& cfg,
                        const TdcfCosts& costs,
                        const std::vector<TrainItem>& train,
                        const std::vector<TrainItem>& dev,
                        const std::filesystem::path& out_dir,
                        std::ostream* log);

}  // namespace gatspoof

#endif  // GATSPOOF_TRAINING_HPP
