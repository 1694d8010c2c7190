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

#include "gatspoof/encoder.hpp"

#include <cmath>
#include <string>

#include "gatspoof/errors.hpp"

namespace gatspoof {

std::vector<EncoderConfig::Stage> EncoderConfig::shape_chain(
    std::size_t freq, std::size_t time) const {
  std::vector<Stage> chain;
  chain.push_back({"input", 1, freq, time});
  auto push = [&](const std::string& name, std::size_t c, std::size_t h,
                  std::size_t w) {
    if (h == 0 || w == 0) {
      throw ShapeError("encoder: stage \"" + name +
                           "\" collapses to zero extent for input " +
                           std::to_string(freq) + "x" + std::to_string(time));
    }
    chain.push_back({name, c, h, w});
  };
  std::size_t h = ad::conv_out_dim(freq, conv1.kh, conv1.sh, conv1.ph);
  std::size_t w = ad::conv_out_dim(time, conv1.kw, conv1.sw, conv1.pw);
  push("conv1", conv1.filters, h, w);
  h = ad::conv_out_dim(h, pool.kh, pool.sh, pool.ph);
  w = ad::conv_out_dim(w, pool.kw, pool.sw, pool.pw);
  push("maxpool", conv1.filters, h, w);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h = ad::conv_out_dim(h, 3, blocks[i].stride, 1);
    w = ad::conv_out_dim(w, 3, blocks[i].stride, 1);
    push("block" + std::to_string(i + 1), blocks[i].channels, h, w);
  }
  push("avgpool", node_dim(), grid_freq, grid_time);
  return chain;
}

template <typename T>
void he_uniform_fill(ad::Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw ContractError("he_uniform_fill: zero fan-in");
  const double bound = std::sqrt(6.0 / double(fan_in));
  auto v = w.value();
  for (auto& x : v) x = T(rng.uniform(-bound, bound));
}

template <typename T>
ResNetEncoder<T>::BnParams::BnParams(ParamStore<T>& store,
                                     const std::string& name,
                                     std::size_t channels)
    : gamma(store.add(name + ".gamma", {channels})),
      beta(store.add(name + ".beta", {channels})),
      state(channels) {
  auto g = gamma.value();
  std::fill(g.begin(), g.end(), T(1));
  store.register_buffer(name + ".running_mean", &state.running_mean);
  store.register_buffer(name + ".running_var", &state.running_var);
}

template <typename T>
ResNetEncoder<T>::ResNetEncoder(const EncoderConfig& cfg, ParamStore<T>& store,
                                Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  if (cfg_.blocks.empty()) {
    throw ConfigError("encoder: at least one residual block is required");
  }
  if (cfg_.grid_freq == 0 || cfg_.grid_time == 0) {
    throw ConfigError("encoder: output grid extents must be positive");
  }
  conv1_w_ = store.add(prefix + ".conv1.weight",
                       {cfg_.conv1.filters, 1, cfg_.conv1.kh, cfg_.conv1.kw});
  he_uniform_fill(conv1_w_, cfg_.conv1.kh * cfg_.conv1.kw, rng);
  bn1_ = std::make_unique<BnParams>(store, prefix + ".bn1", cfg_.conv1.filters);

  std::size_t in_ch = cfg_.conv1.filters;
  for (std::size_t i = 0; i < cfg_.blocks.size(); ++i) {
    const BlockSpec& spec = cfg_.blocks[i];
    if (spec.channels == 0 || spec.stride == 0) {
      throw ConfigError("encoder: block " + std::to_string(i + 1) +
                        " has zero channels or stride");
    }
    const std::string base = prefix + ".block" + std::to_string(i + 1);
    auto blk = std::make_unique<Block>();
    blk->spec = spec;
    blk->conv1_w = store.add(base + ".conv1.weight",
                             {spec.channels, in_ch, 3, 3});
    he_uniform_fill(blk->conv1_w, in_ch * 9, rng);
    blk->bn1 = std::make_unique<BnParams>(store, base + ".bn1", spec.channels);
    blk->conv2_w = store.add(base + ".conv2.weight",
                             {spec.channels, spec.channels, 3, 3});
    he_uniform_fill(blk->conv2_w, spec.channels * 9, rng);
    blk->bn2 = std::make_unique<BnParams>(store, base + ".bn2", spec.channels);
    blk->has_skip = (spec.channels != in_ch) || (spec.stride != 1);
    if (blk->has_skip) {
      blk->skip_w = store.add(base + ".skip.weight",
                              {spec.channels, in_ch, 1, 1});
      he_uniform_fill(blk->skip_w, in_ch, rng);
      blk->bn_skip =
          std::make_unique<BnParams>(store, base + ".skip_bn", spec.channels);
    }
    blocks_.push_back(std::move(blk));
    in_ch = spec.channels;
  }
}

template <typename T>
ad::Tensor<T> ResNetEncoder<T>::forward(const ad::Tensor<T>& x, ad::Mode mode) {
  using ad::Tensor;
  if (x.ndim() != 4 || x.dim(1) != 1) {
    throw ShapeError("encoder: expected input [B, 1, F, T], got " +
                         ad::shape_str(x.shape()));
  }
  if (x.dim(3) < cfg_.min_time) {
    throw ShapeError(
        "encoder: input time dimension " + std::to_string(x.dim(3)) +
        " is below the supported minimum " + std::to_string(cfg_.min_time));
  }
  // Validates that every stage keeps positive extents before any compute.
  cfg_.shape_chain(x.dim(2), x.dim(3));

  Tensor<T> h = ad::conv2d(x, conv1_w_, cfg_.conv1.sh, cfg_.conv1.sw,
                           cfg_.conv1.ph, cfg_.conv1.pw);
  h = ad::batchnorm(h, bn1_->gamma, bn1_->beta, bn1_->state, mode);
  h = ad::selu(h);
  h = ad::maxpool2d(h, cfg_.pool.kh, cfg_.pool.kw, cfg_.pool.sh, cfg_.pool.sw,
                    cfg_.pool.ph, cfg_.pool.pw);

  for (auto& blk : blocks_) {
    const std::size_t s = blk->spec.stride;
    Tensor<T> main = ad::conv2d(h, blk->conv1_w, s, s, 1, 1);
    main = ad::batchnorm(main, blk->bn1->gamma, blk->bn1->beta,
                         blk->bn1->state, mode);
    main = ad::selu(main);
    main = ad::conv2d(main, blk->conv2_w, 1, 1, 1, 1);
    main = ad::batchnorm(main, blk->bn2->gamma, blk->bn2->beta,
                         blk->bn2->state, mode);
    Tensor<T> skip = h;
    if (blk->has_skip) {
      skip = ad::conv2d(h, blk->skip_w, s, s, 0, 0);
      skip = ad::batchnorm(skip, blk->bn_skip->gamma, blk->bn_skip->beta,
                           blk->bn_skip->state, mode);
    }
    h = ad::selu(ad::add(main, skip));
  }
  return ad::adaptive_avg_pool2d(h, cfg_.grid_freq, cfg_.grid_time);
}

template <typename T>
ad::Tensor<T> to_temporal_nodes(const ad::Tensor<T>& x) {
  if (x.ndim() != 4) {
    throw ShapeError("to_temporal_nodes: expected [B, C, F, T], got " +
                         ad::shape_str(x.shape()));
  }
  return ad::permute(ad::mean_axis(x, 2), {0, 2, 1});
}

template <typename T>
ad::Tensor<T> to_spectral_nodes(const ad::Tensor<T>& x) {
  if (x.ndim() != 4) {
    throw ShapeError("to_spectral_nodes: expected [B, C, F, T], got " +
                         ad::shape_str(x.shape()));
  }
  return ad::permute(ad::mean_axis(x, 3), {0, 2, 1});
}

namespace {

template <typename T>
void check_frames(const ad::Tensor<T>& frames, const char* who) {
  if (frames.ndim() != 3) {
    throw ShapeError(std::string(who) + ": expected frames [B, D, Tn], got " +
                         ad::shape_str(frames.shape()));
  }
}

}  // namespace

template <typename T>
ad::Tensor<T> pool_sp(const ad::Tensor<T>& frames, T eps) {
  check_frames(frames, "pool_sp");
  auto mu = ad::mean_axis(frames, 2);
  auto ex2 = ad::mean_axis(ad::mul(frames, frames), 2);
  auto var = ad::sub(ex2, ad::mul(mu, mu));
  auto sd = ad::sqrt(ad::add_scalar(var, eps));
  return ad::concat(std::vector<ad::Tensor<T>>{mu, sd}, 1);
}

template <typename T>
AttnPoolParams<T> make_attn_pool_params(ParamStore<T>& store, std::size_t dim,
                                        Rng& rng, const std::string& prefix) {
  AttnPoolParams<T> p;
  p.w = store.add(prefix + ".w", {dim, dim});
  he_uniform_fill(p.w, dim, rng);
  p.b = store.add(prefix + ".b", {dim});
  p.v = store.add(prefix + ".v", {dim, 1});
  he_uniform_fill(p.v, dim, rng);
  return p;
}

template <typename T>
ad::Tensor<T> attn_pool_weights(const ad::Tensor<T>& frames,
                                const AttnPoolParams<T>& p) {
  check_frames(frames, "attn_pool_weights");
  auto ht = ad::permute(frames, {0, 2, 1});              // [B, Tn, D]
  auto a = ad::tanh(ad::add(ad::matmul(ht, p.w), p.b));  // [B, Tn, D]
  auto s = ad::matmul(a, p.v);                           // [B, Tn, 1]
  return ad::softmax_axis(s, 1);
}

template <typename T>
ad::Tensor<T> pool_sap(const ad::Tensor<T>& frames, const AttnPoolParams<T>& p) {
  check_frames(frames, "pool_sap");
  auto wts = attn_pool_weights(frames, p);             // [B, Tn, 1]
  auto ht = ad::permute(frames, {0, 2, 1});            // [B, Tn, D]
  auto mu = ad::matmul(ad::permute(wts, {0, 2, 1}), ht);  // [B, 1, D]
  return ad::reshape(mu, {frames.dim(0), frames.dim(1)});
}

template <typename T>
ad::Tensor<T> pool_asp(const ad::Tensor<T>& frames, const AttnPoolParams<T>& p,
                       T eps) {
  check_frames(frames, "pool_asp");
  auto wts_t = ad::permute(attn_pool_weights(frames, p), {0, 2, 1});  // [B,1,Tn]
  auto ht = ad::permute(frames, {0, 2, 1});                           // [B,Tn,D]
  const ad::Shape flat{frames.dim(0), frames.dim(1)};
  auto mu = ad::reshape(ad::matmul(wts_t, ht), flat);
  auto e2 = ad::reshape(ad::matmul(wts_t, ad::mul(ht, ht)), flat);
  auto var = ad::sub(e2, ad::mul(mu, mu));
  auto sd = ad::sqrt(ad::add_scalar(var, eps));
  return ad::concat(std::vector<ad::Tensor<T>>{mu, sd}, 1);
}

template <typename T>
ClassifyHead<T> make_classify_head(ParamStore<T>& store, std::size_t in_dim,
                                   Rng& rng, const std::string& prefix) {
  ClassifyHead<T> h;
  h.w = store.add(prefix + ".w", {in_dim, 1});
  he_uniform_fill(h.w, in_dim, rng);
  h.b = store.add(prefix + ".b", {1});
  return h;
}

template <typename T>
ad::Tensor<T> classify_head(const ad::Tensor<T>& pooled,
                            const ClassifyHead<T>& head) {
  if (pooled.ndim() != 2 || pooled.dim(1) != head.w.dim(0)) {
    throw ShapeError("classify_head: pooled " +
                         ad::shape_str(pooled.shape()) +
                         " incompatible with weights " +
                         ad::shape_str(head.w.shape()));
  }
  auto y = ad::reshape(ad::matmul(pooled, head.w), {pooled.dim(0)});
  return ad::add(y, head.b);
}

#define GATSPOOF_INSTANTIATE_ENCODER(T)                                        \
  template void he_uniform_fill<T>(ad::Tensor<T>&, std::size_t, Rng&);         \
  template class ResNetEncoder<T>;                                             \
  template ad::Tensor<T> to_temporal_nodes<T>(const ad::Tensor<T>&);           \
  template ad::Tensor<T> to_spectral_nodes<T>(const ad::Tensor<T>&);           \
  template ad::Tensor<T> pool_sp<T>(const ad::Tensor<T>&, T);                  \
  template AttnPoolParams<T> make_attn_pool_params<T>(                         \
      ParamStore<T>&, std::size_t, Rng&, const std::string&);                  \
  template ad::Tensor<T> attn_pool_weights<T>(const ad::Tensor<T>&,            \
                                              const AttnPoolParams<T>&);       \
  template ad::Tensor<T> pool_sap<T>(const ad::Tensor<T>&,                     \
                                     const AttnPoolParams<T>&);                \
  template ad::Tensor<T> pool_asp<T>(const ad::Tensor<T>&,                     \
                                     const AttnPoolParams<T>&, T);             \
  template ClassifyHead<T> make_classify_head<T>(ParamStore<T>&, std::size_t,  \
                                                 Rng&, const std::string&);    \
  template ad::Tensor<T> classify_head<T>(const ad::Tensor<T>&,                \
                                          const ClassifyHead<T>&);

GATSPOOF_INSTANTIATE_ENCODER(float)
GATSPOOF_INSTANTIATE_ENCODER(double)

}  // namespace gatspoof
