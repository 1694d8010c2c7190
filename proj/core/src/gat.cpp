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

#include "gatspoof/gat.hpp"

#include <cmath>

#include "gatspoof/encoder.hpp"
#include "gatspoof/errors.hpp"

namespace gatspoof {
namespace {

// Accepts [N, D] or [B, N, D]; returns the batched view plus whether
// the input carried a batch axis.
template <typename T>
ad::Tensor<T> as_batched(const ad::Tensor<T>& e, bool* was_batched,
                         const char* who) {
  if (e.ndim() == 3) {
    *was_batched = true;
    return e;
  }
  if (e.ndim() == 2) {
    *was_batched = false;
    return ad::reshape(e, {std::size_t(1), e.dim(0), e.dim(1)});
  }
  throw ShapeError(std::string(who) + ": expected nodes [N, D] or [B, N, D], got " +
                   ad::shape_str(e.shape()));
}

}  // namespace

template <typename T>
GatParams<T>::GatParams(ParamStore<T>& store, std::size_t d, std::size_t dp,
                        Rng& rng, const std::string& prefix)
    : w_map(store.add(prefix + ".w_map", {d})),
      w_att(store.add(prefix + ".w_att", {d, dp})),
      w_res(store.add(prefix + ".w_res", {d, dp})),
      gamma(store.add(prefix + ".bn.gamma", {dp})),
      beta(store.add(prefix + ".bn.beta", {dp})),
      bn(dp),
      w_out(store.add(prefix + ".w_out", {dp})),
      out_bias(store.add(prefix + ".out_bias", {1})) {
  if (d == 0 || dp == 0) {
    throw ConfigError("gat: node and projection dimensions must be positive");
  }
  he_uniform_fill(w_map, d, rng);
  he_uniform_fill(w_att, d, rng);
  he_uniform_fill(w_res, d, rng);
  auto g = gamma.value();
  std::fill(g.begin(), g.end(), T(1));
  he_uniform_fill(w_out, dp, rng);
  store.register_buffer(prefix + ".bn.running_mean", &bn.running_mean);
  store.register_buffer(prefix + ".bn.running_var", &bn.running_var);
}

template <typename T>
ad::Tensor<T> gat_attention(const ad::Tensor<T>& e, const ad::Tensor<T>& w_map) {
  bool batched = false;
  ad::Tensor<T> eb = as_batched(e, &batched, "gat_attention");
  if (w_map.ndim() != 1 || w_map.dim(0) != eb.dim(2)) {
    throw ShapeError("gat_attention: w_map " + ad::shape_str(w_map.shape()) +
                     " does not match node dimension " +
                     std::to_string(eb.dim(2)));
  }
  for (T x : e.value()) {
    if (!std::isfinite(double(x))) {
      throw ContractError("gat_attention: non-finite node feature");
    }
  }
  // scores[b][n][v] = <w_map, e_n * e_v>; softmax over v normalizes the
  // incoming weights of node n, i.e. one column of the public matrix.
  auto ew = ad::mul(eb, w_map);
  auto scores = ad::matmul(ew, ad::permute(eb, {0, 2, 1}));
  auto rows = ad::softmax_axis(scores, 2);
  auto alpha = ad::permute(rows, {0, 2, 1});
  if (!batched) {
    return ad::reshape(alpha, {alpha.dim(1), alpha.dim(2)});
  }
  return alpha;
}

template <typename T>
ad::Tensor<T> gat_aggregate(const ad::Tensor<T>& e, const ad::Tensor<T>& alpha) {
  bool e_batched = false;
  ad::Tensor<T> eb = as_batched(e, &e_batched, "gat_aggregate");
  bool a_batched = false;
  ad::Tensor<T> ab = as_batched(alpha, &a_batched, "gat_aggregate");
  if (e_batched != a_batched || ab.dim(0) != eb.dim(0) ||
      ab.dim(1) != eb.dim(1) || ab.dim(2) != eb.dim(1)) {
    throw ShapeError("gat_aggregate: attention " +
                     ad::shape_str(alpha.shape()) + " does not match nodes " +
                     ad::shape_str(e.shape()));
  }
  // m_n = sum_v alpha[v][n] e_v = (alpha^T e)_n.
  auto m = ad::matmul(ad::permute(ab, {0, 2, 1}), eb);
  if (!e_batched) return ad::reshape(m, {m.dim(1), m.dim(2)});
  return m;
}

template <typename T>
ad::Tensor<T> gat_propagate(const ad::Tensor<T>& e, const ad::Tensor<T>& m,
                            GatParams<T>& p, ad::Mode mode) {
  bool batched = false;
  ad::Tensor<T> eb = as_batched(e, &batched, "gat_propagate");
  bool m_batched = false;
  ad::Tensor<T> mb = as_batched(m, &m_batched, "gat_propagate");
  if (m_batched != batched || mb.shape() != eb.shape()) {
    throw ShapeError("gat_propagate: aggregate " + ad::shape_str(m.shape()) +
                     " does not match nodes " + ad::shape_str(e.shape()));
  }
  if (eb.dim(2) != p.w_att.dim(0)) {
    throw ShapeError("gat_propagate: node dimension " +
                     std::to_string(eb.dim(2)) + " does not match W_att " +
                     ad::shape_str(p.w_att.shape()));
  }
  const std::size_t B = eb.dim(0), N = eb.dim(1), Dp = p.w_att.dim(1);
  auto lin = ad::add(ad::matmul(mb, p.w_att), ad::matmul(eb, p.w_res));
  auto flat = ad::reshape(lin, {B * N, Dp});
  auto norm = ad::batchnorm(flat, p.gamma, p.beta, p.bn, mode);
  auto o = ad::reshape(norm, {B, N, Dp});
  if (!batched) return ad::reshape(o, {N, Dp});
  return o;
}

template <typename T>
ad::Tensor<T> gat_readout(const ad::Tensor<T>& o, const ad::Tensor<T>& w_out) {
  bool batched = false;
  ad::Tensor<T> ob = as_batched(o, &batched, "gat_readout");
  if (w_out.ndim() != 1 || w_out.dim(0) != ob.dim(2)) {
    throw ShapeError("gat_readout: w_out " + ad::shape_str(w_out.shape()) +
                     " does not match node dimension " +
                     std::to_string(ob.dim(2)));
  }
  auto proj = ad::matmul(ob, ad::reshape(w_out, {w_out.dim(0), std::size_t(1)}));
  auto score = ad::mean_axis(ad::reshape(proj, {ob.dim(0), ob.dim(1)}), 1);
  if (!batched) return ad::reshape(score, ad::Shape{});
  return score;
}

template <typename T>
ad::Tensor<T> gat_forward(const ad::Tensor<T>& e, GatParams<T>& p,
                          ad::Mode mode) {
  auto alpha = gat_attention(e, p.w_map);
  auto m = gat_aggregate(e, alpha);
  auto o = gat_propagate(e, m, p, mode);
  auto score = gat_readout(o, p.w_out);
  if (score.ndim() == 0) {
    return ad::add(score, ad::reshape(p.out_bias, ad::Shape{}));
  }
  return ad::add(score, p.out_bias);
}

#define GATSPOOF_INSTANTIATE_GAT(T)                                          \
  template struct GatParams<T>;                                              \
  template ad::Tensor<T> gat_attention<T>(const ad::Tensor<T>&,              \
                                          const ad::Tensor<T>&);             \
  template ad::Tensor<T> gat_aggregate<T>(const ad::Tensor<T>&,              \
                                          const ad::Tensor<T>&);             \
  template ad::Tensor<T> gat_propagate<T>(const ad::Tensor<T>&,              \
                                          const ad::Tensor<T>&, GatParams<T>&, \
                                          ad::Mode);                         \
  template ad::Tensor<T> gat_readout<T>(const ad::Tensor<T>&,                \
                                        const ad::Tensor<T>&);               \
  template ad::Tensor<T> gat_forward<T>(const ad::Tensor<T>&, GatParams<T>&, \
                                        ad::Mode);

GATSPOOF_INSTANTIATE_GAT(float)
GATSPOOF_INSTANTIATE_GAT(double)

}  // namespace gatspoof
