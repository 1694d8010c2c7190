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

#ifndef GATSPOOF_SYSTEMS_HPP
#define GATSPOOF_SYSTEMS_HPP

#include <memory>
#include <string>

#include "gatspoof/encoder.hpp"
#include "gatspoof/gat.hpp"

namespace gatspoof {

/// The five scoreable systems: graph attention over temporal or
/// spectral nodes, and the three pooling baselines.
enum class SystemKind { kGatT, kGatS, kResnetSp, kResnetSap, kResnetAsp };

SystemKind system_kind_from_string(const std::string& s);
std::string to_string(SystemKind kind);

/// A complete scoring model: encoder plus one head, with every
/// parameter registered under one store so training and checkpointing
/// see a single namespace. Construction is deterministic in the seed.
template <typename T>
class SpoofSystem {
 public:
  SpoofSystem(SystemKind kind, const EncoderConfig& enc_cfg,
              std::size_t gat_proj_dim, std::uint64_t seed);

  /// batch: [B, 1, F, T] -> logits [B]. Higher scores mean bona fide.
  ad::Tensor<T> forward(const ad::Tensor<T>& batch, ad::Mode mode);

  SystemKind kind() const { return kind_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }
  const EncoderConfig& encoder_config() const { return encoder_->config(); }

 private:
  SystemKind kind_;
  ParamStore<T> store_;
  std::unique_ptr<ResNetEncoder<T>> encoder_;
  std::unique_ptr<GatParams<T>> gat_;
  std::unique_ptr<AttnPoolParams<T>> attn_;
  std::unique_ptr<ClassifyHead<T>> head_;
};

}  // namespace gatspoof

#endif  // GATSPOOF_SYSTEMS_HPP
