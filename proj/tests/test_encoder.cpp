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
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "gatspoof/ad/ops.hpp"
#include "gatspoof/ad/tensor.hpp"
#include "gatspoof/checkpoint.hpp"
#include "gatspoof/encoder.hpp"
#include "gatspoof/errors.hpp"
#include "gatspoof/rng.hpp"
#include "testutil.hpp"

namespace ad = gatspoof::ad;
using ad::Tensor;
using gatspoof::EncoderConfig;
using gatspoof::ParamStore;
using gatspoof::ResNetEncoder;
using testutil::randn;

namespace {

// Small residual stack that exercises every structural feature
// (identity skip, projection skip, strides) at test-friendly cost.
EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.conv1 = {4, 3, 3, 1, 2, 3, 3};
  cfg.blocks = {{4, 1}, {6, 2}};
  cfg.grid_freq = 2;
  cfg.grid_time = 3;
  cfg.min_time = 8;
  return cfg;
}

struct Row {
  const char* name;
  std::size_t c, h, w;
};

}  // namespace

TEST_CASE("shape chain reproduces the published per-stage sizes") {
  const EncoderConfig cfg;
  const auto chain = cfg.shape_chain(60, 202);
  const Row want[] = {
      {"input", 1, 60, 202},   {"conv1", 64, 64, 103},
      {"maxpool", 64, 32, 52}, {"block1", 64, 32, 52},
      {"block2", 128, 16, 26}, {"block3", 256, 8, 13},
      {"block4", 512, 4, 7},   {"avgpool", 512, 3, 5},
  };
  REQUIRE(chain.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(chain[i].name == want[i].name);
    CHECK(chain[i].c == want[i].c);
    CHECK(chain[i].h == want[i].h);
    CHECK(chain[i].w == want[i].w);
  }
}

TEST_CASE("shape chain handles full-utterance time extents") {
  const EncoderConfig cfg;
  for (const std::size_t time : {std::size_t(401), std::size_t(403)}) {
    const auto chain = cfg.shape_chain(60, time);
    REQUIRE(chain.size() == 8);
    CHECK(chain.back().name == "avgpool");
    CHECK(chain.back().c == 512);
    CHECK(chain.back().h == 3);
    CHECK(chain.back().w == 5);
    CHECK(chain[6].c == 512);
    CHECK(chain[6].h == 4);
    CHECK(chain[6].w == 13);
  }
  // every stage keeps a positive extent across a wide input range
  for (std::size_t t = 96; t <= 500; ++t) CHECK_NOTHROW(cfg.shape_chain(60, t));
}

TEST_CASE("shape chain names the collapsing stage") {
  EncoderConfig cfg;
  cfg.conv1.ph = 0;  // 3-tap kernel cannot cover a 2-bin input unpadded
  CHECK_THROWS_WITH_AS(cfg.shape_chain(2, 100),
                       doctest::Contains("conv1"), gatspoof::ShapeError);
}

TEST_CASE("encoder rejects degenerate configurations") {
  gatspoof::Rng rng(1);
  ParamStore<double> store;
  EncoderConfig no_blocks;
  no_blocks.blocks.clear();
  CHECK_THROWS_AS(ResNetEncoder<double>(no_blocks, store, rng),
                  gatspoof::ConfigError);
  EncoderConfig no_grid;
  no_grid.grid_freq = 0;
  ParamStore<double> store2;
  CHECK_THROWS_AS(ResNetEncoder<double>(no_grid, store2, rng),
                  gatspoof::ConfigError);
}

TEST_CASE("parameter inventory matches a recount from the layer table") {
  const EncoderConfig cfg;
  gatspoof::Rng rng(5);
  ParamStore<double> store;
  ResNetEncoder<double> enc(cfg, store, rng);

  std::size_t want = cfg.conv1.filters * cfg.conv1.kh * cfg.conv1.kw;
  want += 2 * cfg.conv1.filters;  // stem batchnorm
  std::size_t bn_count = 1;
  std::size_t in_ch = cfg.conv1.filters;
  for (const auto& b : cfg.blocks) {
    want += b.channels * in_ch * 9 + b.channels * b.channels * 9;
    want += 4 * b.channels;
    bn_count += 2;
    if (b.channels != in_ch || b.stride != 1) {
      want += b.channels * in_ch + 2 * b.channels;
      bn_count += 1;
    }
    in_ch = b.channels;
  }
  CHECK(store.scalar_count() == want);
  CHECK(store.scalar_count() == 4896960);  // about 4.9M trainable scalars
  CHECK(store.buffers().size() == 2 * bn_count);

  CHECK_NOTHROW(store.find("encoder.conv1.weight"));
  CHECK_NOTHROW(store.find("encoder.block2.skip.weight"));
  CHECK_NOTHROW(store.find("encoder.block4.bn2.beta"));
  CHECK_THROWS_AS(store.find("encoder.block1.skip.weight"),
                  gatspoof::ContractError);  // identity skip has no weights
}

TEST_CASE("initialization: He-uniform weights, unit gamma, zero beta") {
  const EncoderConfig cfg;
  gatspoof::Rng rng(7);
  ParamStore<float> store;
  ResNetEncoder<float> enc(cfg, store, rng);

  const Tensor<float> w = store.find("encoder.block2.conv2.weight");
  const double bound = std::sqrt(6.0 / (128.0 * 9.0));
  float lo = 0.0f, hi = 0.0f;
  for (const float v : w.value()) {
    CHECK(std::abs(v) <= bound);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi > 0.5 * bound);  // the draw actually spans the interval
  CHECK(lo < -0.5 * bound);

  for (const float g : store.find("encoder.bn1.gamma").value())
    CHECK(g == 1.0f);
  for (const float b : store.find("encoder.bn1.beta").value())
    CHECK(b == 0.0f);

  gatspoof::Rng rng2(7);
  ParamStore<float> store2;
  ResNetEncoder<float> enc2(cfg, store2, rng2);
  const Tensor<float> w2 = store2.find("encoder.block2.conv2.weight");
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(w.value()[i] == w2.value()[i]);

  Tensor<float> t(ad::Shape{3});
  gatspoof::Rng rng3(9);
  CHECK_THROWS_AS(gatspoof::he_uniform_fill(t, 0, rng3),
                  gatspoof::ContractError);
}

TEST_CASE("full-size forward reaches the 512-channel output grid") {
  const EncoderConfig cfg;
  gatspoof::Rng rng(11);
  ParamStore<float> store;
  ResNetEncoder<float> enc(cfg, store, rng);

  Tensor<float> x(ad::Shape{1, 1, 60, 202});
  for (auto& v : x.value()) v = float(rng.normal(0.0, 1.0));
  const Tensor<float> y = enc.forward(x, ad::Mode::kEval);
  CHECK(y.shape() == ad::Shape{1, 512, 3, 5});
  for (const float v : y.value()) CHECK(std::isfinite(v));

  Tensor<float> x401(ad::Shape{1, 1, 60, 401});
  for (auto& v : x401.value()) v = float(rng.normal(0.0, 1.0));
  CHECK(enc.forward(x401, ad::Mode::kEval).shape() ==
        ad::Shape{1, 512, 3, 5});
}

TEST_CASE("forward rejects malformed inputs and short utterances") {
  const EncoderConfig cfg;
  gatspoof::Rng rng(13);
  ParamStore<float> store;
  ResNetEncoder<float> enc(cfg, store, rng);

  CHECK_THROWS_AS(enc.forward(Tensor<float>(ad::Shape{1, 2, 60, 202}, 0.0f),
                              ad::Mode::kEval),
                  gatspoof::ShapeError);
  CHECK_THROWS_AS(enc.forward(Tensor<float>(ad::Shape{60, 202}, 0.0f),
                              ad::Mode::kEval),
                  gatspoof::ShapeError);
  CHECK_THROWS_WITH_AS(enc.forward(Tensor<float>(ad::Shape{1, 1, 60, 95}, 0.0f),
                                   ad::Mode::kEval),
                       doctest::Contains("95"), gatspoof::ShapeError);
}

TEST_CASE("stem composition lands on the documented intermediate size") {
  gatspoof::Rng rng(17);
  Tensor<double> x = randn(rng, {1, 1, 60, 202});
  Tensor<double> k = randn(rng, {64, 1, 3, 3});
  const Tensor<double> c = ad::conv2d(x, k, 1, 2, 3, 3);
  REQUIRE(c.shape() == ad::Shape{1, 64, 64, 103});
  const Tensor<double> p = ad::maxpool2d(c, 3, 3, 2, 2, 1, 1);
  CHECK(p.shape() == ad::Shape{1, 64, 32, 52});
}

TEST_CASE("node extraction averages the stated axis") {
  gatspoof::Rng rng(19);
  Tensor<double> x = randn(rng, {2, 3, 4, 5});

  const Tensor<double> tn = gatspoof::to_temporal_nodes(x);
  REQUIRE(tn.shape() == ad::Shape{2, 5, 3});
  const Tensor<double> sn = gatspoof::to_spectral_nodes(x);
  REQUIRE(sn.shape() == ad::Shape{2, 4, 3});

  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t t = 0; t < 5; ++t) {
        double mean = 0.0;
        for (std::size_t f = 0; f < 4; ++f)
          mean += x.value()[((b * 3 + c) * 4 + f) * 5 + t];
        mean /= 4.0;
        CHECK(std::abs(tn.value()[(b * 5 + t) * 3 + c] - mean) < 1e-12);
      }
      for (std::size_t f = 0; f < 4; ++f) {
        double mean = 0.0;
        for (std::size_t t = 0; t < 5; ++t)
          mean += x.value()[((b * 3 + c) * 4 + f) * 5 + t];
        mean /= 5.0;
        CHECK(std::abs(sn.value()[(b * 4 + f) * 3 + c] - mean) < 1e-12);
      }
    }

  // the encoder grid yields five temporal and three spectral nodes
  const EncoderConfig cfg;
  Tensor<double> grid(ad::Shape{1, 512, cfg.grid_freq, cfg.grid_time}, 0.5);
  CHECK(gatspoof::to_temporal_nodes(grid).shape() == ad::Shape{1, 5, 512});
  CHECK(gatspoof::to_spectral_nodes(grid).shape() == ad::Shape{1, 3, 512});

  // constant maps give identical node vectors
  const Tensor<double> cn = gatspoof::to_temporal_nodes(grid);
  for (const double v : cn.value()) CHECK(v == 0.5);

  CHECK_THROWS_AS(gatspoof::to_temporal_nodes(Tensor<double>(ad::Shape{2, 3, 4},
                                                             0.0)),
                  gatspoof::ShapeError);
  CHECK_THROWS_AS(gatspoof::to_spectral_nodes(Tensor<double>(ad::Shape{2, 3, 4},
                                                             0.0)),
                  gatspoof::ShapeError);
}

TEST_CASE("statistics pooling matches a brute-force recount") {
  gatspoof::Rng rng(23);
  Tensor<double> frames = randn(rng, {2, 4, 6});
  const Tensor<double> out = gatspoof::pool_sp(frames);
  REQUIRE(out.shape() == ad::Shape{2, 8});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t d = 0; d < 4; ++d) {
      double mu = 0.0, e2 = 0.0;
      for (std::size_t t = 0; t < 6; ++t) {
        const double v = frames.value()[(b * 4 + d) * 6 + t];
        mu += v;
        e2 += v * v;
      }
      mu /= 6.0;
      e2 /= 6.0;
      const double sd = std::sqrt(e2 - mu * mu + 1e-8);
      CHECK(std::abs(out.value()[b * 8 + d] - mu) < 1e-10);
      CHECK(std::abs(out.value()[b * 8 + 4 + d] - sd) < 1e-10);
    }

  // constant frames: mean passes through, deviation is the epsilon guard
  Tensor<double> flat(ad::Shape{1, 3, 5}, 0.75);
  const Tensor<double> fo = gatspoof::pool_sp(flat);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(fo.value()[d] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(fo.value()[3 + d] == doctest::Approx(1e-4).epsilon(1e-6));
  }

  // a single frame is its own mean
  Tensor<double> one = randn(rng, {2, 3, 1});
  const Tensor<double> oo = gatspoof::pool_sp(one);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(oo.value()[b * 6 + d] ==
            doctest::Approx(one.value()[b * 3 + d]).epsilon(1e-14));
      CHECK(oo.value()[b * 6 + 3 + d] == doctest::Approx(1e-4).epsilon(1e-6));
    }

  CHECK_THROWS_AS(gatspoof::pool_sp(Tensor<double>(ad::Shape{2, 3}, 0.0)),
                  gatspoof::ShapeError);
}

TEST_CASE("attentive pooling weights are stochastic over frames") {
  gatspoof::Rng rng(29);
  ParamStore<double> store;
  const auto p = gatspoof::make_attn_pool_params(store, 4, rng, "pool");
  for (const double b : store.find("pool.b").value()) CHECK(b == 0.0);

  Tensor<double> frames = randn(rng, {2, 4, 7});
  const Tensor<double> w = gatspoof::attn_pool_weights(frames, p);
  REQUIRE(w.shape() == ad::Shape{2, 7, 1});
  for (std::size_t b = 0; b < 2; ++b) {
    double sum = 0.0;
    for (std::size_t t = 0; t < 7; ++t) {
      CHECK(w.value()[b * 7 + t] > 0.0);
      sum += w.value()[b * 7 + t];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  // identical frames attract uniform weights and SAP returns the frame
  std::vector<double> rep(1 * 4 * 5);
  const double frame[4] = {0.3, -1.2, 0.8, 2.0};
  for (std::size_t d = 0; d < 4; ++d)
    for (std::size_t t = 0; t < 5; ++t) rep[d * 5 + t] = frame[d];
  Tensor<double> same(ad::Shape{1, 4, 5}, std::move(rep));
  const Tensor<double> uw = gatspoof::attn_pool_weights(same, p);
  for (std::size_t t = 0; t < 5; ++t)
    CHECK(std::abs(uw.value()[t] - 0.2) < 1e-12);
  const Tensor<double> sap = gatspoof::pool_sap(same, p);
  REQUIRE(sap.shape() == ad::Shape{1, 4});
  for (std::size_t d = 0; d < 4; ++d)
    CHECK(sap.value()[d] == doctest::Approx(frame[d]).epsilon(1e-12));

  // a single frame is returned unchanged whatever the parameters
  Tensor<double> one = randn(rng, {3, 4, 1});
  const Tensor<double> so = gatspoof::pool_sap(one, p);
  for (std::size_t i = 0; i < 12; ++i)
    CHECK(so.value()[i] == doctest::Approx(one.value()[i]).epsilon(1e-12));
}

TEST_CASE("attentive statistics pooling reduces to SP under uniform weights") {
  gatspoof::Rng rng(31);
  ParamStore<double> store;
  auto p = gatspoof::make_attn_pool_params(store, 4, rng, "pool");
  {
    // zero scoring vector: softmax of constant scores is uniform
    auto v = p.v.value();
    std::fill(v.begin(), v.end(), 0.0);
  }
  Tensor<double> frames = randn(rng, {2, 4, 6});
  const Tensor<double> asp = gatspoof::pool_asp(frames, p);
  const Tensor<double> sp = gatspoof::pool_sp(frames);
  REQUIRE(asp.shape() == ad::Shape{2, 8});
  for (std::size_t i = 0; i < asp.size(); ++i)
    CHECK(std::abs(asp.value()[i] - sp.value()[i]) < 1e-10);

  // identical frames: deviation column collapses to the epsilon guard
  Tensor<double> flat(ad::Shape{1, 4, 3}, -0.4);
  const Tensor<double> fo = gatspoof::pool_asp(flat, p);
  for (std::size_t d = 0; d < 4; ++d) {
    CHECK(fo.value()[d] == doctest::Approx(-0.4).epsilon(1e-14));
    CHECK(fo.value()[4 + d] == doctest::Approx(1e-4).epsilon(1e-6));
  }
}

TEST_CASE("classification head is the stated affine readout") {
  gatspoof::Rng rng(37);
  ParamStore<double> store;
  auto head = gatspoof::make_classify_head(store, 8, rng, "head");
  for (const double b : store.find("head.b").value()) CHECK(b == 0.0);

  {
    auto w = head.w.value();
    std::fill(w.begin(), w.end(), 0.0);
    auto b = head.b.value();
    b[0] = 1.75;
  }
  Tensor<double> pooled = randn(rng, {3, 8});
  const Tensor<double> logits = gatspoof::classify_head(pooled, head);
  REQUIRE(logits.shape() == ad::Shape{3});
  for (const double v : logits.value()) CHECK(v == 1.75);

  CHECK_THROWS_AS(
      gatspoof::classify_head(Tensor<double>(ad::Shape{3, 9}, 0.0), head),
      gatspoof::ShapeError);

  gatspoof::Rng fd_rng(39);
  ParamStore<double> store2;
  auto head2 = gatspoof::make_classify_head(store2, 5, fd_rng, "head");
  Tensor<double> x = randn(fd_rng, {2, 5});
  const auto rep = testutil::fd_check(
      [&] {
        return ad::sum_all(ad::mul(gatspoof::classify_head(x, head2),
                                   Tensor<double>(ad::Shape{2}, {1.5, -2.5})));
      },
      {x, head2.w, head2.b});
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("eval-mode forward is batch-composition invariant") {
  const EncoderConfig cfg = tiny_config();
  gatspoof::Rng rng(41);
  ParamStore<double> store;
  ResNetEncoder<double> enc(cfg, store, rng);

  // one training pass gives the running statistics real values
  Tensor<double> warm = randn(rng, {4, 1, 8, 16});
  enc.forward(warm, ad::Mode::kTrain);

  Tensor<double> batch = randn(rng, {3, 1, 8, 16});
  const Tensor<double> full = enc.forward(batch, ad::Mode::kEval);
  REQUIRE(full.shape() == ad::Shape{3, cfg.node_dim(), 2, 3});
  const std::size_t per = cfg.node_dim() * 2 * 3;
  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<double> one(batch.value().begin() + std::ptrdiff_t(b * 128),
                            batch.value().begin() + std::ptrdiff_t(b * 128) +
                                128);
    const Tensor<double> yi =
        enc.forward(Tensor<double>(ad::Shape{1, 1, 8, 16}, std::move(one)),
                    ad::Mode::kEval);
    for (std::size_t i = 0; i < per; ++i)
      CHECK(std::abs(yi.value()[i] - full.value()[b * per + i]) < 1e-9);
  }
}

TEST_CASE("composed encoder gradients agree with finite differences") {
  const EncoderConfig cfg = tiny_config();
  gatspoof::Rng rng(43);
  ParamStore<double> store;
  ResNetEncoder<double> enc(cfg, store, rng);

  Tensor<double> x = randn(rng, {2, 1, 8, 16});
  std::vector<Tensor<double>> leaves{x};
  for (const auto& p : store.params()) leaves.push_back(p.tensor);

  gatspoof::Rng pick(47);
  const auto rep = testutil::fd_check(
      [&] {
        gatspoof::Rng wrng(49);
        return testutil::spread_with(enc.forward(x, ad::Mode::kTrain), wrng);
      },
      leaves, 1e-5, 24, &pick);
  CHECK(rep.max_rel_err < 1e-3);
  CHECK(rep.n_checked >= 24);
}
