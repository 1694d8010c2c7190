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

#ifndef GATSPOOF_ENCODER_HPP
#define GATSPOOF_ENCODER_HPP

#include <memory>
#include <string>
#include <vector>

#include "gatspoof/ad/ops.hpp"
#include "gatspoof/ad/tensor.hpp"
#include "gatspoof/checkpoint.hpp"
#include "gatspoof/rng.hpp"

namespace gatspoof {

struct ConvSpec {
  std::size_t filters = 64;
  std::size_t kh = 3, kw = 3;
  std::size_t sh = 1, sw = 2;
  std::size_t ph = 3, pw = 3;
};

struct PoolSpec {
  std::size_t kh = 3, kw = 3;
  std::size_t sh = 2, sw = 2;
  std::size_t ph = 1, pw = 1;
};

struct BlockSpec {
  std::size_t channels = 64;
  std::size_t stride = 1;  // first conv of the block; skip conv matches
};

/// Layer tables are configuration data: shape arithmetic and parameter
/// registration derive from these fields, never from hard-coded sizes.
struct EncoderConfig {
  ConvSpec conv1;
  PoolSpec pool;
  std::vector<BlockSpec> blocks{{64, 1}, {128, 2}, {256, 2}, {512, 2}};
  std::size_t grid_freq = 3;
  std::size_t grid_time = 5;
  /// Smallest input time dimension for which every stage keeps a
  /// positive extent and the adaptive grid is reachable.
  std::size_t min_time = 96;

  std::size_t node_dim() const {
    return blocks.empty() ? conv1.filters : blocks.back().channels;
  }

  struct Stage {
    std::string name;
    std::size_t c, h, w;
  };
  /// Per-stage output sizes for a (freq, time) input, used for shape
  /// diagnostics. Throws ShapeError naming the first stage whose output
  /// would collapse to zero.
  std::vector<Stage> shape_chain(std::size_t freq, std::size_t time) const;
};

/// ResNet-18 style front-end: conv + maxpool stem, one residual block
/// per stage with a projection skip on any shape change, SELU
/// activations, and a fixed adaptive-average output grid.
template <typename T>
class ResNetEncoder {
 public:
  ResNetEncoder(const EncoderConfig& cfg, ParamStore<T>& store, Rng& rng,
                const std::string& prefix = "encoder");

  /// x: [B, 1, F, T] -> [B, C, grid_freq, grid_time].
  ad::Tensor<T> forward(const ad::Tensor<T>& x, ad::Mode mode);

  const EncoderConfig& config() const { return cfg_; }

 private:
  struct BnParams {
    ad::Tensor<T> gamma, beta;
    ad::BatchNormState<T> state;
    BnParams(ParamStore<T>& store, const std::string& name,
             std::size_t channels);
  };
  struct Block {
    BlockSpec spec;
    ad::Tensor<T> conv1_w, conv2_w;
    std::unique_ptr<BnParams> bn1, bn2;
    bool has_skip = false;
    ad::Tensor<T> skip_w;
    std::unique_ptr<BnParams> bn_skip;
  };

  EncoderConfig cfg_;
  ad::Tensor<T> conv1_w_;
  std::unique_ptr<BnParams> bn1_;
  std::vector<std::unique_ptr<Block>> blocks_;
};

/// He-uniform fill for a weight tensor with the given fan-in.
template <typename T>
void he_uniform_fill(ad::Tensor<T>& w, std::size_t fan_in, Rng& rng);

/// [B, C, F, T] -> [B, T, C]: frequency-averaged temporal node set.
template <typename T>
ad::Tensor<T> to_temporal_nodes(const ad::Tensor<T>& x);

/// [B, C, F, T] -> [B, F, C]: time-averaged spectral node set.
template <typename T>
ad::Tensor<T> to_spectral_nodes(const ad::Tensor<T>& x);

/// Statistics pooling over frames [B, D, Tn] -> [B, 2D]
/// (mean concatenated with epsilon-guarded standard deviation).
template <typename T>
ad::Tensor<T> pool_sp(const ad::Tensor<T>& frames, T eps = T(1e-8));

template <typename T>
struct AttnPoolParams {
  ad::Tensor<T> w;  // [D, D]
  ad::Tensor<T> b;  // [D]
  ad::Tensor<T> v;  // [D, 1]
};

template <typename T>
AttnPoolParams<T> make_attn_pool_params(ParamStore<T>& store, std::size_t dim,
                                        Rng& rng, const std::string& prefix);

/// Frame attention weights [B, Tn, 1]; softmax over frames.
template <typename T>
ad::Tensor<T> attn_pool_weights(const ad::Tensor<T>& frames,
                                const AttnPoolParams<T>& p);

/// Self-attentive pooling [B, D, Tn] -> [B, D].
template <typename T>
ad::Tensor<T> pool_sap(const ad::Tensor<T>& frames, const AttnPoolParams<T>& p);

/// Attentive statistics pooling [B, D, Tn] -> [B, 2D].
template <typename T>
ad::Tensor<T> pool_asp(const ad::Tensor<T>& frames, const AttnPoolParams<T>& p,
                       T eps = T(1e-8));

template <typename T>
struct ClassifyHead {
  ad::Tensor<T> w;  // [K, 1]
  ad::Tensor<T> b;  // [1]
};

template <typename T>
ClassifyHead<T> make_classify_head(ParamStore<T>& store, std::size_t in_dim,
                                   Rng& rng, const std::string& prefix);

/// Affine readout [B, K] -> [B] logits.
template <typename T>
ad::Tensor<T> classify_head(const ad::Tensor<T>& pooled,
                            const ClassifyHead<T>& head);

}  // namespace gatspoof

#endif  // GATSPOOF_ENCODER_HPP
