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

#ifndef GATSPOOF_GAT_HPP
#define GATSPOOF_GAT_HPP

#include <string>

#include "gatspoof/ad/ops.hpp"
#include "gatspoof/ad/tensor.hpp"
#include "gatspoof/checkpoint.hpp"
#include "gatspoof/rng.hpp"

namespace gatspoof {

/// Single-layer, single-head graph attention over a fully connected
/// graph with self-loops. Node inputs have dimension D; the attention
/// and residual projections map to D', batch norm folds the batch and
/// node axes so the layer stays node-permutation equivariant, and the
/// readout averages per-node scalar projections.
template <typename T>
struct GatParams {
  ad::Tensor<T> w_map;            // [D]   element-wise attention map
  ad::Tensor<T> w_att;            // [D, Dp], bias-free
  ad::Tensor<T> w_res;            // [D, Dp], bias-free
  ad::Tensor<T> gamma, beta;      // [Dp]
  ad::BatchNormState<T> bn;       // Dp channels
  ad::Tensor<T> w_out;            // [Dp]
  ad::Tensor<T> out_bias;         // [1], applied after the node average

  GatParams(ParamStore<T>& store, std::size_t d, std::size_t dp, Rng& rng,
            const std::string& prefix = "gat");
};

/// Attention weights from node features.
/// e: [N, D] -> alpha [N, N] or e: [B, N, D] -> alpha [B, N, N].
/// alpha[v][n] is the weight of source node v in the aggregate of node
/// n, so each column sums to one. Non-finite node features are a
/// caller error.
template <typename T>
ad::Tensor<T> gat_attention(const ad::Tensor<T>& e, const ad::Tensor<T>& w_map);

/// Weighted aggregate m_n = sum_v alpha[v][n] e_v, shapes as attention.
template <typename T>
ad::Tensor<T> gat_aggregate(const ad::Tensor<T>& e, const ad::Tensor<T>& alpha);

/// o_n = BN(W_att m_n + W_res e_n); the batch axis (if any) and the
/// node axis are folded for normalization.
template <typename T>
ad::Tensor<T> gat_propagate(const ad::Tensor<T>& e, const ad::Tensor<T>& m,
                            GatParams<T>& p, ad::Mode mode);

/// Graph score before the output bias: mean_n <o_n, w_out>.
/// o: [N, Dp] -> scalar, o: [B, N, Dp] -> [B].
template <typename T>
ad::Tensor<T> gat_readout(const ad::Tensor<T>& o, const ad::Tensor<T>& w_out);

/// Full layer: attention, aggregate, propagate, readout, plus bias.
/// e: [B, N, D] -> [B] logits (or scalar for an unbatched graph).
template <typename T>
ad::Tensor<T> gat_forward(const ad::Tensor<T>& e, GatParams<T>& p,
                          ad::Mode mode);

}  // namespace gatspoof

#endif  // GATSPOOF_GAT_HPP
