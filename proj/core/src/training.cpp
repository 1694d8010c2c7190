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

#include "gatspoof/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <utility>

#include "gatspoof/errors.hpp"

namespace gatspoof {

template <typename T>
AdamOptimizer<T>::AdamOptimizer(ParamStore<T>& store, const TrainConfig& cfg)
    : store_(&store),
      lr_(cfg.lr),
      weight_decay_(cfg.weight_decay),
      decoupled_(cfg.decoupled_weight_decay) {
  // lr = 0 is a valid no-op optimizer; only negative or NaN rates are
  // configuration errors.
  if (!(lr_ >= 0.0)) {
    throw ConfigError("adam: learning rate must be nonnegative");
  }
  if (weight_decay_ < 0.0) {
    throw ConfigError("adam: weight decay must be nonnegative");
  }
  m_.reserve(store.params().size());
  v_.reserve(store.params().size());
  for (const auto& p : store.params()) {
    m_.emplace_back(p.tensor.size(), T(0));
    v_.emplace_back(p.tensor.size(), T(0));
  }
}

template <typename T>
void AdamOptimizer<T>::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, double(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, double(t_));
  const auto& params = store_->params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor<T> t = params[i].tensor;  // non-const handle
    auto theta = t.value();
    auto grad = t.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      double g = grad.empty() ? 0.0 : double(grad[j]);
      if (!std::isfinite(g)) {
        throw ContractError("adam: non-finite gradient in parameter \"" +
                            params[i].name + "\"");
      }
      if (!decoupled_) g += weight_decay_ * double(theta[j]);
      const double mj = kBeta1 * double(m[j]) + (1.0 - kBeta1) * g;
      const double vj = kBeta2 * double(v[j]) + (1.0 - kBeta2) * g * g;
      m[j] = T(mj);
      v[j] = T(vj);
      double upd = lr_ * (mj / bc1) / (std::sqrt(vj / bc2) + kEps);
      if (decoupled_) upd += lr_ * weight_decay_ * double(theta[j]);
      theta[j] = T(double(theta[j]) - upd);
    }
  }
}

std::vector<TrainItem> make_train_items(
    const std::vector<CachedFeatures>& cache,
    const std::vector<TrialRecord>& protocol) {
  std::unordered_map<std::string, const FeatureMap*> by_utt;
  by_utt.reserve(cache.size());
  for (const auto& c : cache) {
    if (!by_utt.emplace(c.utt_id, &c.features).second) {
      throw ContractError("make_train_items: duplicate cache entry \"" +
                          c.utt_id + "\"");
    }
  }
  std::vector<TrainItem> items;
  items.reserve(protocol.size());
  std::vector<std::string> missing;
  for (const auto& r : protocol) {
    auto it = by_utt.find(r.utt_id);
    if (it == by_utt.end()) {
      missing.push_back(r.utt_id);
      continue;
    }
    items.push_back({r.utt_id, *it->second, r.bonafide, r.attack_id});
  }
  if (!missing.empty()) {
    std::string msg = "make_train_items: no cached features for: ";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) msg += ", ";
      msg += missing[i];
    }
    if (missing.size() > shown) {
      msg += ", ... (" + std::to_string(missing.size()) + " total)";
    }
    throw ContractError(msg);
  }
  return items;
}

template <typename T>
Trainer<T>::Trainer(SpoofSystem<T>& system, const TrainConfig& cfg)
    : system_(&system), cfg_(cfg), opt_(system.params(), cfg), rng_(cfg.seed) {
  if (cfg_.batch_size == 0) {
    throw ConfigError("trainer: batch size must be positive");
  }
}

template <typename T>
void Trainer<T>::check_items(const std::vector<TrainItem>& items) const {
  if (items.empty()) throw ContractError("trainer: empty item list");
  const std::size_t bands = items.front().features.n_bands;
  const std::size_t frames = items.front().features.n_frames;
  if (bands == 0 || frames == 0) {
    throw ContractError("trainer: empty feature map for \"" +
                        items.front().utt_id + "\"");
  }
  for (const auto& it : items) {
    if (it.features.n_bands != bands || it.features.n_frames != frames) {
      throw ContractError(
          "trainer: feature shape mismatch for \"" + it.utt_id + "\" (" +
          std::to_string(it.features.n_bands) + "x" +
          std::to_string(it.features.n_frames) + " vs " +
          std::to_string(bands) + "x" + std::to_string(frames) + ")");
    }
    if (it.features.values.size() != bands * frames) {
      throw ContractError("trainer: feature buffer size mismatch for \"" +
                          it.utt_id + "\"");
    }
  }
}

template <typename T>
ad::Tensor<T> Trainer<T>::assemble_batch(const std::vector<TrainItem>& items,
                                         const std::vector<std::size_t>& order,
                                         std::size_t begin, std::size_t end,
                                         bool augment) {
  const std::size_t B = end - begin;
  const std::size_t F = items.front().features.n_bands;
  const std::size_t Tn = items.front().features.n_frames;
  ad::Tensor<T> batch({B, std::size_t(1), F, Tn});
  auto out = batch.value();

  FreqMask mask;
  const bool masking = augment && cfg_.mask_max_width > 0;
  if (masking) {
    mask = sample_freq_mask(rng_, F, cfg_.mask_max_width);
    mask_events_.push_back({opt_.step_count(), mask, B});
  }
  for (std::size_t b = 0; b < B; ++b) {
    const FeatureMap& f = items[order[begin + b]].features;
    const float fill =
        (masking && mask.width > 0 && !cfg_.mask_fill_zero)
            ? feature_mean(f)
            : 0.0f;
    T* dst = out.data() + b * F * Tn;
    for (std::size_t i = 0; i < F * Tn; ++i) dst[i] = T(f.values[i]);
    if (masking && mask.width > 0) {
      for (std::size_t band = mask.start_band;
           band < mask.start_band + mask.width; ++band) {
        std::fill_n(dst + band * Tn, Tn, T(fill));
      }
    }
  }
  return batch;
}

template <typename T>
std::size_t Trainer<T>::run_steps(
    const std::vector<TrainItem>& train, std::size_t max_steps,
    const std::function<bool(std::size_t, double)>& step_cb) {
  check_items(train);
  if (order_.size() != train.size()) {
    order_.resize(train.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng_.shuffle(order_.begin(), order_.end());
    cursor_ = 0;
  }
  std::size_t steps = 0;
  while (steps < max_steps) {
    if (cursor_ >= order_.size()) {
      rng_.shuffle(order_.begin(), order_.end());
      cursor_ = 0;
    }
    const std::size_t begin = cursor_;
    const std::size_t end = std::min(begin + cfg_.batch_size, order_.size());
    cursor_ = end;

    auto batch = assemble_batch(train, order_, begin, end, true);
    std::vector<T> targets(end - begin);
    for (std::size_t b = 0; b < end - begin; ++b) {
      targets[b] = train[order_[begin + b]].bonafide ? T(1) : T(0);
    }

    system_->params().zero_grad();
    double batch_loss = 0.0;
    {
      ad::Tape<T> tape;
      typename ad::Tape<T>::Scope scope(tape);
      auto logits = system_->forward(batch, ad::Mode::kTrain);
      auto loss = ad::bce_with_logits(logits, targets);
      batch_loss = double(loss.item());
      tape.backward(loss);
    }
    opt_.step();
    ++steps;
    if (step_cb && !step_cb(opt_.step_count(), batch_loss)) break;
  }
  return steps;
}

template <typename T>
double Trainer<T>::run_epoch(const std::vector<TrainItem>& train) {
  check_items(train);
  // Start the epoch on a fresh shuffle regardless of prior run_steps use.
  order_.resize(train.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  rng_.shuffle(order_.begin(), order_.end());
  cursor_ = 0;

  double total = 0.0;
  std::size_t seen = 0;
  while (cursor_ < order_.size()) {
    const std::size_t begin = cursor_;
    const std::size_t end = std::min(begin + cfg_.batch_size, order_.size());
    cursor_ = end;
    auto batch = assemble_batch(train, order_, begin, end, true);
    std::vector<T> targets(end - begin);
    for (std::size_t b = 0; b < end - begin; ++b) {
      targets[b] = train[order_[begin + b]].bonafide ? T(1) : T(0);
    }
    system_->params().zero_grad();
    double batch_loss = 0.0;
    {
      ad::Tape<T> tape;
      typename ad::Tape<T>::Scope scope(tape);
      auto logits = system_->forward(batch, ad::Mode::kTrain);
      auto loss = ad::bce_with_logits(logits, targets);
      batch_loss = double(loss.item());
      tape.backward(loss);
    }
    opt_.step();
    total += batch_loss * double(end - begin);
    seen += end - begin;
  }
  return total / double(seen);
}

template <typename T>
std::vector<double> Trainer<T>::score(const std::vector<TrainItem>& items) {
  check_items(items);
  std::vector<std::size_t> ident(items.size());
  for (std::size_t i = 0; i < ident.size(); ++i) ident[i] = i;
  std::vector<double> out;
  out.reserve(items.size());
  for (std::size_t begin = 0; begin < items.size();
       begin += cfg_.batch_size) {
    const std::size_t end =
        std::min(begin + cfg_.batch_size, items.size());
    auto batch = assemble_batch(items, ident, begin, end, false);
    auto logits = system_->forward(batch, ad::Mode::kEval);
    for (T v : logits.value()) out.push_back(double(v));
  }
  return out;
}

template <typename T>
TrainOutcome train_full(SpoofSystem<T>& system, const TrainConfig& cfg,
                        const TdcfCosts& costs,
                        const std::vector<TrainItem>& train,
                        const std::vector<TrainItem>& dev,
                        const std::filesystem::path& out_dir,
                        std::ostream* log) {
  costs.validate();
  std::filesystem::create_directories(out_dir);

  auto ratio = [](const std::vector<TrainItem>& items) {
    std::size_t bona = 0;
    for (const auto& it : items) bona += it.bonafide ? 1 : 0;
    return std::pair<std::size_t, std::size_t>(bona, items.size() - bona);
  };
  const auto [train_bona, train_spoof] = ratio(train);
  const auto [dev_bona, dev_spoof] = ratio(dev);
  if (log) {
    *log << "train: " << train_bona << " bona fide / " << train_spoof
         << " spoof\n"
         << "dev: " << dev_bona << " bona fide / " << dev_spoof << " spoof\n";
  }

  Trainer<T> trainer(system, cfg);
  TrainOutcome outcome;
  outcome.checkpoint_path = out_dir / "checkpoint_best.bin";
  outcome.log_path = out_dir / "train_log.csv";

  std::ofstream csv(outcome.log_path, std::ios::trunc);
  if (!csv) {
    throw Error("train_full: cannot open " + outcome.log_path.string());
  }
  csv << "epoch,train_loss,dev_eer,dev_min_tdcf\n";

  std::vector<std::vector<T>> best;
  double best_eer = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double train_loss = trainer.run_epoch(train);
    const auto dev_scores = trainer.score(dev);
    ScoreSet dev_set;
    dev_set.reserve(dev.size());
    for (std::size_t i = 0; i < dev.size(); ++i) {
      dev_set.push_back(
          {dev[i].utt_id, dev_scores[i], dev[i].bonafide, dev[i].attack_id});
    }
    EpochStats stats{epoch, train_loss, eer(dev_set),
                     min_tdcf(dev_set, costs)};
    outcome.log.push_back(stats);
    csv << stats.epoch << "," << format_double(stats.train_loss) << ","
        << format_double(stats.dev_eer) << ","
        << format_double(stats.dev_min_tdcf) << "\n";
    csv.flush();
    if (log) {
      *log << "epoch " << stats.epoch << ": train_loss "
           << format_double(stats.train_loss) << ", dev_eer "
           << format_double(stats.dev_eer) << ", dev_min_tdcf "
           << format_double(stats.dev_min_tdcf) << "\n";
    }
    if (stats.dev_eer < best_eer) {
      best_eer = stats.dev_eer;
      best = system.params().snapshot();
      outcome.best_epoch = epoch;
      outcome.best_dev_eer = stats.dev_eer;
    }
  }
  if (!best.empty()) {
    system.params().restore(best);
    save_checkpoint(outcome.checkpoint_path, system.params());
  }
  return outcome;
}

#define GATSPOOF_INSTANTIATE_TRAIN(T)                                     \
  template class AdamOptimizer<T>;                                        \
  template class Trainer<T>;                                              \
  template TrainOutcome train_full<T>(                                    \
      SpoofSystem<T>&, const TrainConfig&, const TdcfCosts&,              \
      const std::vector<TrainItem>&, const std::vector<TrainItem>&,       \
      const std::filesystem::path&, std::ostream*);

GATSPOOF_INSTANTIATE_TRAIN(float)
GATSPOOF_INSTANTIATE_TRAIN(double)

}  // namespace gatspoof
