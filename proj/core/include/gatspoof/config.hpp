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

#ifndef GATSPOOF_CONFIG_HPP
#define GATSPOOF_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gatspoof/encoder.hpp"
#include "gatspoof/features.hpp"
#include "gatspoof/metrics.hpp"
#include "gatspoof/training.hpp"

namespace gatspoof {

/// Typed key-value configuration with a closed key registry: unknown
/// keys are rejected, every key has a documented default. Values are
/// set from files ("section.key = value" lines, '#' comments),
/// environment variables (GATSPOOF_SECTION_KEY), or directly.
class PipelineConfig {
 public:
  enum class Type { kInt, kReal, kBool, kStr };

  struct KeyInfo {
    std::string key;
    Type type = Type::kStr;
    std::string default_value;
    std::string doc;
    std::vector<std::string> allowed;  // enum values; empty = free-form
  };

  PipelineConfig();

  /// Parses "key = value" lines; '#' starts a comment anywhere.
  void load_file(const std::filesystem::path& path);
  /// Validates the key against the registry and the value against its
  /// type before storing.
  void set(const std::string& key, const std::string& value);
  /// Applies GATSPOOF_* environment overrides; returns the number of
  /// keys overridden.
  std::size_t apply_env();

  std::int64_t get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_str(const std::string& key) const;

  const std::vector<KeyInfo>& registry() const;
  /// Environment variable name for a key ("train.lr" ->
  /// "GATSPOOF_TRAIN_LR").
  static std::string env_name(const std::string& key);
  /// One line per key: name, default, documentation.
  static std::string help_text();

  // Typed views assembled from the raw keys, validated on access.
  StftConfig stft_config() const;
  LfbConfig lfb_config() const;
  EncoderConfig encoder_config() const;
  std::size_t gat_proj_dim() const;
  TrainConfig train_config() const;
  TdcfCosts tdcf_costs() const;
  SystemKind system() const;
  std::size_t workers() const;
  std::size_t target_len() const;
  int sample_rate() const;
  bool mask_fill_zero() const;
  bool precision_is_double() const;

 private:
  const KeyInfo& info(const std::string& key) const;
  std::vector<std::string> values_;  // parallel to the registry
};

}  // namespace gatspoof

#endif  // GATSPOOF_CONFIG_HPP
