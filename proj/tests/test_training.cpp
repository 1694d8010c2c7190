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

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gatspoof/ad/ops.hpp"
#include "gatspoof/ad/tensor.hpp"
#include "gatspoof/checkpoint.hpp"
#include "gatspoof/errors.hpp"
#include "gatspoof/rng.hpp"
#include "gatspoof/systems.hpp"
#include "gatspoof/training.hpp"
#include "testutil.hpp"

namespace ad = gatspoof::ad;
using ad::Tensor;
using gatspoof::AdamOptimizer;
using gatspoof::ParamStore;
using gatspoof::SpoofSystem;
using gatspoof::TrainConfig;
using gatspoof::Trainer;
using gatspoof::TrainItem;

namespace {

gatspoof::EncoderConfig tiny_encoder() {
  gatspoof::EncoderConfig cfg;
  cfg.conv1 = {4, 3, 3, 1, 2, 3, 3};
  cfg.blocks = {{4, 1}, {6, 2}};
  cfg.grid_freq = 2;
  cfg.grid_time = 3;
  cfg.min_time = 8;
  return cfg;
}

SpoofSystem<double> tiny_system(gatspoof::SystemKind kind =
                                    gatspoof::SystemKind::kGatT,
                                std::uint64_t seed = 1) {
  return SpoofSystem<double>(kind, tiny_encoder(), 4, seed);
}

// Class-separable 8x16 feature maps with per-item jitter.
std::vector<TrainItem> toy_items(std::size_t n_bona, std::size_t n_spoof,
                                 std::uint64_t seed = 99) {
  gatspoof::Rng rng(seed);
  std::vector<TrainItem> items;
  for (std::size_t i = 0; i < n_bona + n_spoof; ++i) {
    const bool bona = i < n_bona;
    gatspoof::FeatureMap f;
    f.n_bands = 8;
    f.n_frames = 16;
    f.values.resize(8 * 16);
    for (auto& v : f.values) {
      v = float((bona ? 1.5 : -1.5) + rng.normal(0.0, 0.3));
    }
    items.push_back({(bona ? "B" : "S") + std::to_string(i), std::move(f),
                     bona, bona ? "-" : "A01"});
  }
  return items;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 4;
  cfg.seed = 7;
  cfg.mask_max_width = 0;
  return cfg;
}

}  // namespace

TEST_CASE("adam converges on a separable quadratic") {
  ParamStore<double> store;
  Tensor<double> x = store.add("x", {2});
  {
    auto v = x.value();
    v[0] = 0.3 + 0.005;
    v[1] = -0.7 - 0.004;
  }
  TrainConfig cfg;
  cfg.lr = 0.003;
  cfg.weight_decay = 0.0;
  AdamOptimizer<double> opt(store, cfg);

  const Tensor<double> target(ad::Shape{2}, {0.3, -0.7});
  for (int step = 0; step < 200; ++step) {
    store.zero_grad();
    ad::Tape<double> tape;
    ad::Tape<double>::Scope scope(tape);
    Tensor<double> d = ad::sub(x, target);
    Tensor<double> loss = ad::sum_all(ad::mul(d, d));
    tape.backward(loss);
    opt.step();
  }
  CHECK(opt.step_count() == 200);
  // gradient of the quadratic at the final iterate
  CHECK(std::abs(2.0 * (x.value()[0] - 0.3)) < 1e-6);
  CHECK(std::abs(2.0 * (x.value()[1] + 0.7)) < 1e-6);
}

TEST_CASE("adam first step moves by the learning rate") {
  ParamStore<double> store;
  Tensor<double> x = store.add("x", {3});
  {
    auto v = x.value();
    v[0] = 1.0;
    v[1] = -2.0;
    v[2] = 0.5;
  }
  TrainConfig cfg;
  cfg.lr = 1e-4;
  cfg.weight_decay = 0.0;
  AdamOptimizer<double> opt(store, cfg);

  const std::vector<double> before(x.value().begin(), x.value().end());
  {
    ad::Tape<double> tape;
    ad::Tape<double>::Scope scope(tape);
    Tensor<double> loss =
        ad::sum_all(ad::mul(x, Tensor<double>(ad::Shape{3},
                                              {2.0, -0.5, 0.01})));
    tape.backward(loss);
  }
  opt.step();
  for (std::size_t j = 0; j < 3; ++j) {
    const double delta = std::abs(x.value()[j] - before[j]);
    CHECK(delta <= cfg.lr * (1.0 + 1e-12));
    CHECK(delta >= cfg.lr * 0.99);  // |g| >> eps, so the ratio is near one
  }
  // the sign of the update opposes the gradient
  CHECK(x.value()[0] < before[0]);
  CHECK(x.value()[1] > before[1]);
}

TEST_CASE("adam without gradients or decay is a no-op") {
  ParamStore<double> store;
  Tensor<double> x = store.add("x", {2});
  {
    auto v = x.value();
    v[0] = 0.25;
    v[1] = -1.75;
  }
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.0;
  AdamOptimizer<double> opt(store, cfg);
  opt.step();
  opt.step();
  CHECK(x.value()[0] == 0.25);
  CHECK(x.value()[1] == -1.75);
}

TEST_CASE("adam aborts on a non-finite gradient, naming the parameter") {
  ParamStore<double> store;
  Tensor<double> good = store.add("head.w", {2});
  Tensor<double> bad = store.add("gat.w_map", {2});
  TrainConfig cfg;
  cfg.lr = 0.01;
  auto g = bad.mutable_grad();
  g[1] = std::numeric_limits<double>::quiet_NaN();
  AdamOptimizer<double> opt(store, cfg);
  CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("gat.w_map"),
                       gatspoof::ContractError);
}

TEST_CASE("weight decay shrinks parameter norms without data gradients") {
  for (const bool decoupled : {false, true}) {
    CAPTURE(decoupled);
    ParamStore<double> store;
    Tensor<double> x = store.add("x", {2});
    {
      auto v = x.value();
      v[0] = 1.0;
      v[1] = -2.0;
    }
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.01;
    cfg.decoupled_weight_decay = decoupled;
    AdamOptimizer<double> opt(store, cfg);

    double prev = std::hypot(x.value()[0], x.value()[1]);
    for (int step = 0; step < 50; ++step) {
      opt.step();
      const double now = std::hypot(x.value()[0], x.value()[1]);
      CHECK(now < prev);
      prev = now;
    }
  }

  // the two decay styles produce different trajectories
  auto run = [](bool decoupled) {
    ParamStore<double> store;
    Tensor<double> x = store.add("x", {1});
    x.value()[0] = 1.0;
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.01;
    cfg.decoupled_weight_decay = decoupled;
    AdamOptimizer<double> opt(store, cfg);
    for (int step = 0; step < 5; ++step) opt.step();
    return x.value()[0];
  };
  CHECK(std::abs(run(false) - run(true)) > 1e-12);
}

TEST_CASE("optimizer configuration is validated") {
  ParamStore<double> store;
  store.add("x", {1});
  TrainConfig bad_lr;
  bad_lr.lr = -1e-4;
  CHECK_THROWS_AS(AdamOptimizer<double>(store, bad_lr),
                  gatspoof::ConfigError);
  TrainConfig bad_wd;
  bad_wd.weight_decay = -0.1;
  CHECK_THROWS_AS(AdamOptimizer<double>(store, bad_wd),
                  gatspoof::ConfigError);
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  auto system = tiny_system();
  TrainConfig cfg = toy_config();
  cfg.lr = 0.0;
  cfg.mask_max_width = 4;
  Trainer<double> trainer(system, cfg);

  const auto items = toy_items(4, 4);
  const auto before = system.params().snapshot();
  std::vector<std::vector<double>> buffers_before;
  for (const auto& b : system.params().buffers())
    buffers_before.push_back(*b.data);

  trainer.run_epoch(items);

  const auto after = system.params().snapshot();
  const std::size_t n_params = system.params().params().size();
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < n_params; ++i) {
    REQUIRE(before[i].size() == after[i].size());
    for (std::size_t j = 0; j < before[i].size(); ++j)
      CHECK(before[i][j] == after[i][j]);
  }
  // the batch-norm running statistics did advance
  bool moved = false;
  for (std::size_t i = 0; i < buffers_before.size(); ++i) {
    const auto& now = *system.params().buffers()[i].data;
    for (std::size_t j = 0; j < now.size(); ++j)
      moved = moved || now[j] != buffers_before[i][j];
  }
  CHECK(moved);
}

TEST_CASE("make_train_items joins cache and protocol strictly") {
  std::vector<gatspoof::CachedFeatures> cache;
  for (const char* id : {"U3", "U1", "U2", "SPARE"}) {
    gatspoof::CachedFeatures c;
    c.utt_id = id;
    c.features.n_bands = 2;
    c.features.n_frames = 3;
    c.features.values.assign(6, float(id[1]));
    cache.push_back(std::move(c));
  }
  const std::vector<gatspoof::TrialRecord> protocol{
      {"spk1", "U1", "-", true},
      {"spk2", "U2", "A01", false},
      {"spk1", "U3", "A02", false},
  };
  const auto items = gatspoof::make_train_items(cache, protocol);
  REQUIRE(items.size() == 3);  // protocol order, extra cache entries ignored
  CHECK(items[0].utt_id == "U1");
  CHECK(items[0].bonafide);
  CHECK(items[0].attack_id == "-");
  CHECK(items[1].utt_id == "U2");
  CHECK_FALSE(items[1].bonafide);
  CHECK(items[1].attack_id == "A01");
  CHECK(items[2].utt_id == "U3");
  CHECK(items[2].features.values[0] == float('3'));

  std::vector<gatspoof::TrialRecord> more = protocol;
  more.push_back({"spk4", "U4", "A03", false});
  CHECK_THROWS_WITH_AS(gatspoof::make_train_items(cache, more),
                       doctest::Contains("U4"), gatspoof::ContractError);

  auto dup = cache;
  dup.push_back(dup.front());
  CHECK_THROWS_WITH_AS(gatspoof::make_train_items(dup, protocol),
                       doctest::Contains("duplicate"),
                       gatspoof::ContractError);
}

TEST_CASE("trainer validates items and configuration") {
  auto system = tiny_system();
  TrainConfig cfg = toy_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(Trainer<double>(system, cfg), gatspoof::ConfigError);

  Trainer<double> trainer(system, toy_config());
  CHECK_THROWS_AS(trainer.run_steps({}, 1), gatspoof::ContractError);

  auto items = toy_items(2, 2);
  items[1].features.n_bands = 4;
  items[1].features.values.resize(4 * 16);
  CHECK_THROWS_WITH_AS(trainer.run_steps(items, 1),
                       doctest::Contains(items[1].utt_id.c_str()),
                       gatspoof::ContractError);
}

TEST_CASE("training is deterministic in the seed") {
  const auto items = toy_items(4, 4);
  auto run = [&](std::uint64_t seed) {
    auto system = tiny_system(gatspoof::SystemKind::kGatT, 11);
    TrainConfig cfg = toy_config();
    cfg.seed = seed;
    cfg.mask_max_width = 3;
    Trainer<double> trainer(system, cfg);
    std::vector<double> losses;
    trainer.run_steps(items, 6, [&](std::size_t, double loss) {
      losses.push_back(loss);
      return true;
    });
    for (const auto& block : system.params().snapshot())
      losses.insert(losses.end(), block.begin(), block.end());
    return losses;
  };
  const auto a = run(7);
  const auto b = run(7);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  const auto c = run(8);
  bool differs = false;
  for (std::size_t i = 0; i < a.size() && i < c.size(); ++i)
    differs = differs || a[i] != c[i];
  CHECK(differs);
}

TEST_CASE("one mask per training batch, none at evaluation") {
  auto system = tiny_system();
  TrainConfig cfg = toy_config();
  cfg.batch_size = 3;
  cfg.mask_max_width = 5;
  Trainer<double> trainer(system, cfg);

  const auto items = toy_items(4, 4);
  const std::size_t steps = trainer.run_steps(items, 5);
  CHECK(steps == 5);
  REQUIRE(trainer.mask_events().size() == 5);
  for (const auto& ev : trainer.mask_events()) {
    CHECK(ev.mask.width <= 5);
    CHECK(ev.mask.start_band + ev.mask.width <= 8);
    CHECK(ev.batch_items >= 2);  // 8 items in batches of 3: 3, 3, 2
    CHECK(ev.batch_items <= 3);
  }

  trainer.score(items);
  CHECK(trainer.mask_events().size() == 5);  // unchanged by evaluation

  // disabling the augmentation records nothing
  auto system2 = tiny_system();
  TrainConfig off = toy_config();
  off.mask_max_width = 0;
  Trainer<double> t2(system2, off);
  t2.run_steps(items, 3);
  CHECK(t2.mask_events().empty());
}

TEST_CASE("zero-filled masked bands carry no signal; mean fill does") {
  const std::size_t n_items = 4;
  auto base_items = toy_items(2, 2);

  // find a seed whose first batch mask has positive width
  TrainConfig probe = toy_config();
  probe.batch_size = n_items;
  probe.mask_max_width = 4;
  probe.mask_fill_zero = true;
  std::uint64_t seed = 0;
  gatspoof::FreqMask first_mask;
  for (std::uint64_t s = 1; s < 64; ++s) {
    auto sys = tiny_system();
    TrainConfig cfg = probe;
    cfg.seed = s;
    Trainer<double> t(sys, cfg);
    t.run_steps(base_items, 1);
    if (t.mask_events().at(0).mask.width > 0) {
      seed = s;
      first_mask = t.mask_events().at(0).mask;
      break;
    }
  }
  REQUIRE(seed != 0);

  auto first_loss = [&](bool fill_zero, double perturb) {
    auto sys = tiny_system();
    TrainConfig cfg = probe;
    cfg.seed = seed;
    cfg.mask_fill_zero = fill_zero;
    Trainer<double> t(sys, cfg);
    auto items = base_items;
    // nudge one frame inside the to-be-masked band of every item
    for (auto& it : items)
      it.features.values[first_mask.start_band * 16 + 5] += float(perturb);
    double loss = 0.0;
    t.run_steps(items, 1, [&](std::size_t, double l) {
      loss = l;
      return false;
    });
    return loss;
  };

  CHECK(first_loss(true, 0.0) == first_loss(true, 10.0));
  CHECK(first_loss(false, 0.0) != first_loss(false, 10.0));
}

TEST_CASE("scoring preserves order and matches per-item evaluation") {
  auto system = tiny_system();
  TrainConfig cfg = toy_config();
  Trainer<double> trainer(system, cfg);
  auto items = toy_items(3, 2);
  trainer.run_steps(items, 2);  // give batch norm real running statistics

  const auto scores = trainer.score(items);
  REQUIRE(scores.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto one = trainer.score({items[i]});
    REQUIRE(one.size() == 1);
    CHECK(std::abs(one[0] - scores[i]) < 1e-9);
  }
}

TEST_CASE("full training keeps the best-dev checkpoint and a CSV log") {
  testutil::TempDir tmp;
  auto system = tiny_system();
  TrainConfig cfg = toy_config();
  cfg.epochs = 3;
  cfg.lr = 2e-3;
  const auto train = toy_items(4, 4, 31);
  const auto dev = toy_items(3, 3, 37);

  std::ostringstream log;
  const auto outcome = gatspoof::train_full(system, cfg, gatspoof::TdcfCosts{},
                                            train, dev, tmp.path(), &log);

  REQUIRE(outcome.log.size() == 3);
  CHECK(outcome.best_epoch >= 1);
  CHECK(outcome.best_epoch <= 3);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  for (const auto& s : outcome.log) {
    if (s.dev_eer < best) {
      best = s.dev_eer;
      best_epoch = s.epoch;
    }
  }
  CHECK(outcome.best_epoch == best_epoch);
  CHECK(outcome.best_dev_eer == best);

  CHECK(log.str().find("train: 4 bona fide / 4 spoof") != std::string::npos);
  CHECK(log.str().find("dev: 3 bona fide / 3 spoof") != std::string::npos);

  std::ifstream csv(outcome.log_path);
  REQUIRE(bool(csv));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "epoch,train_loss,dev_eer,dev_min_tdcf");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 3);

  // the checkpoint on disk is the in-memory best snapshot
  REQUIRE(std::filesystem::exists(outcome.checkpoint_path));
  auto fresh = tiny_system(gatspoof::SystemKind::kGatT, 999);
  gatspoof::load_checkpoint(outcome.checkpoint_path, fresh.params());
  const auto want = system.params().snapshot();
  const auto got = fresh.params().snapshot();
  REQUIRE(want.size() == got.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    for (std::size_t j = 0; j < want[i].size(); ++j)
      CHECK(want[i][j] == got[i][j]);
}

TEST_CASE("equal dev performance keeps the earliest epoch") {
  testutil::TempDir tmp;
  auto system = tiny_system();
  TrainConfig cfg = toy_config();
  cfg.epochs = 3;
  // identical features with opposite labels score identically under any
  // model, so the dev sweep gives exactly one half every epoch
  auto dev = toy_items(1, 0);
  dev.push_back(dev[0]);
  dev[1].utt_id = "S_twin";
  dev[1].bonafide = false;
  dev[1].attack_id = "A01";
  const auto train = toy_items(4, 4);
  const auto outcome = gatspoof::train_full(system, cfg, gatspoof::TdcfCosts{},
                                            train, dev, tmp.path(), nullptr);
  REQUIRE(outcome.log.size() == 3);
  for (const auto& s : outcome.log) CHECK(s.dev_eer == 0.5);
  CHECK(outcome.best_epoch == 1);
  CHECK(outcome.best_dev_eer == 0.5);
}
