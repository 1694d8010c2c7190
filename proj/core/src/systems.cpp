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

#include "gatspoof/systems.hpp"

#include "gatspoof/errors.hpp"

namespace gatspoof {

SystemKind system_kind_from_string(const std::string& s) {
  if (s == "gat_t") return SystemKind::kGatT;
  if (s == "gat_s") return SystemKind::kGatS;
  if (s == "resnet_sp") return SystemKind::kResnetSp;
  if (s == "resnet_sap") return SystemKind::kResnetSap;
  if (s == "resnet_asp") return SystemKind::kResnetAsp;
  throw ConfigError(
      "unknown system \"" + s +
      "\" (expected gat_t, gat_s, resnet_sp, resnet_sap, or resnet_asp)");
}

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::kGatT: return "gat_t";
    case SystemKind::kGatS: return "gat_s";
    case SystemKind::kResnetSp: return "resnet_sp";
    case SystemKind::kResnetSap: return "resnet_sap";
    case SystemKind::kResnetAsp: return "resnet_asp";
  }
  throw ContractError("to_string: invalid SystemKind");
}

template <typename T>
SpoofSystem<T>::SpoofSystem(SystemKind kind, const EncoderConfig& enc_cfg,
                            std::size_t gat_proj_dim, std::uint64_t seed)
    : kind_(kind) {
  Rng rng(seed);
  encoder_ = std::make_unique<ResNetEncoder<T>>(enc_cfg, store_, rng);
  const std::size_t d = enc_cfg.node_dim();
  switch (kind_) {
    case SystemKind::kGatT:
    case SystemKind::kGatS:
      gat_ = std::make_unique<GatParams<T>>(store_, d, gat_proj_dim, rng);
      break;
    case SystemKind::kResnetSp:
      head_ = std::make_unique<ClassifyHead<T>>(
          make_classify_head<T>(store_, 2 * d, rng, "head"));
      break;
    case SystemKind::kResnetSap:
      attn_ = std::make_unique<AttnPoolParams<T>>(
          make_attn_pool_params<T>(store_, d, rng, "attn"));
      head_ = std::make_unique<ClassifyHead<T>>(
          make_classify_head<T>(store_, d, rng, "head"));
      break;
    case SystemKind::kResnetAsp:
      attn_ = std::make_unique<AttnPoolParams<T>>(
          make_attn_pool_params<T>(store_, d, rng, "attn"));
      head_ = std::make_unique<ClassifyHead<T>>(
          make_classify_head<T>(store_, 2 * d, rng, "head"));
      break;
  }
}

template <typename T>
ad::Tensor<T> SpoofSystem<T>::forward(const ad::Tensor<T>& batch,
                                      ad::Mode mode) {
  auto grid = encoder_->forward(batch, mode);  // [B, C, gf, gt]
  switch (kind_) {
    case SystemKind::kGatT:
      return gat_forward(to_temporal_nodes(grid), *gat_, mode);
    case SystemKind::kGatS:
      return gat_forward(to_spectral_nodes(grid), *gat_, mode);
    case SystemKind::kResnetSp:
      return classify_head(pool_sp(ad::mean_axis(grid, 2)), *head_);
    case SystemKind::kResnetSap:
      return classify_head(pool_sap(ad::mean_axis(grid, 2), *attn_), *head_);
    case SystemKind::kResnetAsp:
      return classify_head(pool_asp(ad::mean_axis(grid, 2), *attn_), *head_);
  }
  throw ContractError("SpoofSystem::forward: invalid SystemKind");
}

template class SpoofSystem<float>;
template class SpoofSystem<double>;

}  // namespace gatspoof
