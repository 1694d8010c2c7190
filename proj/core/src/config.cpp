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

#include "gatspoof/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gatspoof/errors.hpp"

namespace gatspoof {
namespace {

using Type = PipelineConfig::Type;
using KeyInfo = PipelineConfig::KeyInfo;

const std::vector<KeyInfo>& key_registry() {
  static const std::vector<KeyInfo> kKeys = {
      {"audio.sample_rate", Type::kInt, "16000",
       "expected input sample rate in Hz; files at other rates are rejected",
       {}},
      {"audio.target_len", Type::kInt, "64600",
       "fixed utterance length in samples; shorter audio is tiled, longer "
       "audio truncated",
       {}},
      {"features.n_bands", Type::kInt, "60",
       "number of triangular log-filterbank bands", {}},
      {"features.win_ms", Type::kInt, "30", "analysis window length in ms", {}},
      {"features.hop_ms", Type::kInt, "10", "frame hop in ms", {}},
      {"features.n_fft", Type::kInt, "512",
       "FFT length (power of two, at least the window length)", {}},
      {"features.window", Type::kStr, "hann", "analysis window",
       {"hann", "rect"}},
      {"features.log_floor", Type::kReal, "1e-30",
       "clamp applied to filterbank energies before the log", {}},
      {"features.mask_max_width", Type::kInt, "12",
       "largest frequency-mask width in bands; 0 disables masking", {}},
      {"features.mask_fill", Type::kStr, "mean",
       "fill value for masked bands", {"mean", "zero"}},
      {"encoder.conv1", Type::kStr, "64 3x3 1x2 3x3",
       "stem conv as \"filters KHxKW SHxSW PHxPW\"", {}},
      {"encoder.pool", Type::kStr, "3x3 2x2 1x1",
       "stem max-pool as \"KHxKW SHxSW PHxPW\"", {}},
      {"encoder.blocks", Type::kStr, "64x1 128x2 256x2 512x2",
       "residual blocks as \"CHANNELSxSTRIDE\" per stage", {}},
      {"encoder.grid", Type::kStr, "3x5",
       "adaptive average-pool output grid \"FREQxTIME\"", {}},
      {"encoder.min_time", Type::kInt, "96",
       "smallest supported input time extent", {}},
      {"gat.proj_dim", Type::kInt, "128",
       "projected node dimension of the graph attention layer", {}},
      {"train.system", Type::kStr, "gat_t", "system to train or score",
       {"gat_t", "gat_s", "resnet_sp", "resnet_sap", "resnet_asp"}},
      {"train.lr", Type::kReal, "0.0001", "Adam learning rate", {}},
      {"train.weight_decay", Type::kReal, "0.0001",
       "L2 penalty added to gradients (see train.decoupled_weight_decay)",
       {}},
      {"train.decoupled_weight_decay", Type::kBool, "false",
       "apply weight decay as a decoupled post-step instead of an L2 "
       "gradient term",
       {}},
      {"train.batch_size", Type::kInt, "64", "mini-batch size", {}},
      {"train.epochs", Type::kInt, "300", "training epochs", {}},
      {"train.seed", Type::kInt, "1",
       "seed for init, shuffling, and augmentation", {}},
      {"train.precision", Type::kStr, "float32",
       "numeric precision of model parameters and activations",
       {"float32", "float64"}},
      {"tdcf.p_tar", Type::kReal, "0.9405", "prior of target trials", {}},
      {"tdcf.p_non", Type::kReal, "0.0095", "prior of non-target trials", {}},
      {"tdcf.p_spoof", Type::kReal, "0.05", "prior of spoof trials", {}},
      {"tdcf.c_miss_asv", Type::kReal, "1", "cost of an ASV miss", {}},
      {"tdcf.c_fa_asv", Type::kReal, "10", "cost of an ASV false accept", {}},
      {"tdcf.c_miss_cm", Type::kReal, "1",
       "cost of the countermeasure rejecting bona fide speech", {}},
      {"tdcf.c_fa_cm", Type::kReal, "10",
       "cost of the countermeasure accepting spoofed speech", {}},
      {"tdcf.asv_p_fa", Type::kReal, "0.05",
       "ASV false-accept rate at its fixed operating point", {}},
      {"tdcf.asv_p_miss", Type::kReal, "0.05",
       "ASV miss rate at its fixed operating point", {}},
      {"tdcf.asv_p_miss_spoof", Type::kReal, "0.05",
       "ASV miss rate on spoof trials at its fixed operating point", {}},
      {"fusion.c", Type::kReal, "1", "SVM regularization constant C", {}},
      {"run.workers", Type::kInt, "1",
       "worker threads for per-utterance extraction and scoring", {}},
  };
  return kKeys;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got \"" + value + "\"");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got \"" + value + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true/false, got \"" + value + "\"");
}

/// "AxB" with positive A, B.
std::pair<std::size_t, std::size_t> parse_pair(const std::string& key,
                                               const std::string& tok) {
  const auto x = tok.find('x');
  if (x == std::string::npos || x == 0 || x + 1 == tok.size()) {
    throw ConfigError(key + ": expected \"AxB\", got \"" + tok + "\"");
  }
  const std::int64_t a = parse_int(key, tok.substr(0, x));
  const std::int64_t b = parse_int(key, tok.substr(x + 1));
  if (a <= 0 || b <= 0) {
    throw ConfigError(key + ": extents must be positive in \"" + tok + "\"");
  }
  return {std::size_t(a), std::size_t(b)};
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream iss(s);
  std::vector<std::string> out;
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

PipelineConfig::PipelineConfig() {
  values_.reserve(key_registry().size());
  for (const auto& k : key_registry()) values_.push_back(k.default_value);
}

const std::vector<KeyInfo>& PipelineConfig::registry() const {
  return key_registry();
}

const KeyInfo& PipelineConfig::info(const std::string& key) const {
  const auto& reg = key_registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].key == key) return reg[i];
  }
  throw ConfigError("unknown config key \"" + key + "\"");
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const auto& reg = key_registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].key != key) continue;
    switch (reg[i].type) {
      case Type::kInt: parse_int(key, value); break;
      case Type::kReal: parse_real(key, value); break;
      case Type::kBool: parse_bool(key, value); break;
      case Type::kStr:
        if (!reg[i].allowed.empty() &&
            std::find(reg[i].allowed.begin(), reg[i].allowed.end(), value) ==
                reg[i].allowed.end()) {
          std::string opts;
          for (const auto& a : reg[i].allowed) {
            if (!opts.empty()) opts += ", ";
            opts += a;
          }
          throw ConfigError(key + ": \"" + value + "\" is not one of: " + opts);
        }
        break;
    }
    values_[i] = value;
    return;
  }
  throw ConfigError("unknown config key \"" + key + "\"");
}

void PipelineConfig::load_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected \"key = value\"");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected \"key = value\"");
    }
    try {
      set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
}

std::string PipelineConfig::env_name(const std::string& key) {
  std::string name = "GATSPOOF_";
  for (char c : key) {
    name.push_back(c == '.' ? '_'
                            : char(std::toupper(static_cast<unsigned char>(c))));
  }
  return name;
}

std::size_t PipelineConfig::apply_env() {
  std::size_t n = 0;
  for (const auto& k : key_registry()) {
    if (const char* v = std::getenv(env_name(k.key).c_str())) {
      set(k.key, v);
      ++n;
    }
  }
  return n;
}

std::string PipelineConfig::help_text() {
  std::ostringstream out;
  out << "Configuration keys (config file \"key = value\" lines, or "
         "environment\noverrides named GATSPOOF_SECTION_KEY):\n";
  for (const auto& k : key_registry()) {
    out << "  " << k.key << " (default " << k.default_value << ")";
    if (!k.allowed.empty()) {
      out << " [";
      for (std::size_t i = 0; i < k.allowed.size(); ++i) {
        if (i) out << "|";
        out << k.allowed[i];
      }
      out << "]";
    }
    out << "\n      " << k.doc << "\n";
  }
  return out.str();
}

std::int64_t PipelineConfig::get_int(const std::string& key) const {
  const auto& reg = key_registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].key == key) {
      if (reg[i].type != Type::kInt) {
        throw ConfigError(key + " is not an integer key");
      }
      return parse_int(key, values_[i]);
    }
  }
  throw ConfigError("unknown config key \"" + key + "\"");
}

double PipelineConfig::get_real(const std::string& key) const {
  const auto& reg = key_registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].key == key) {
      if (reg[i].type != Type::kReal && reg[i].type != Type::kInt) {
        throw ConfigError(key + " is not a numeric key");
      }
      return parse_real(key, values_[i]);
    }
  }
  throw ConfigError("unknown config key \"" + key + "\"");
}

bool PipelineConfig::get_bool(const std::string& key) const {
  const auto& reg = key_registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].key == key) {
      if (reg[i].type != Type::kBool) {
        throw ConfigError(key + " is not a boolean key");
      }
      return parse_bool(key, values_[i]);
    }
  }
  throw ConfigError("unknown config key \"" + key + "\"");
}

const std::string& PipelineConfig::get_str(const std::string& key) const {
  const auto& reg = key_registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].key == key) return values_[i];
  }
  throw ConfigError("unknown config key \"" + key + "\"");
}

StftConfig PipelineConfig::stft_config() const {
  StftConfig cfg;
  cfg.win_ms = int(get_int("features.win_ms"));
  cfg.hop_ms = int(get_int("features.hop_ms"));
  const std::int64_t n_fft = get_int("features.n_fft");
  if (cfg.win_ms <= 0 || cfg.hop_ms <= 0 || n_fft <= 0) {
    throw ConfigError("features: window, hop, and FFT length must be positive");
  }
  cfg.n_fft = std::size_t(n_fft);
  cfg.window =
      get_str("features.window") == "rect" ? WindowKind::kRect
                                           : WindowKind::kHann;
  return cfg;
}

LfbConfig PipelineConfig::lfb_config() const {
  LfbConfig cfg;
  cfg.stft = stft_config();
  const std::int64_t bands = get_int("features.n_bands");
  if (bands <= 0) throw ConfigError("features.n_bands must be positive");
  cfg.n_bands = std::size_t(bands);
  cfg.log_floor = get_real("features.log_floor");
  if (!(cfg.log_floor > 0.0)) {
    throw ConfigError("features.log_floor must be positive");
  }
  return cfg;
}

EncoderConfig PipelineConfig::encoder_config() const {
  EncoderConfig cfg;
  {
    const std::string key = "encoder.conv1";
    const auto toks = split_ws(get_str(key));
    if (toks.size() != 4) {
      throw ConfigError(key + ": expected \"filters KHxKW SHxSW PHxPW\"");
    }
    const std::int64_t filters = parse_int(key, toks[0]);
    if (filters <= 0) throw ConfigError(key + ": filters must be positive");
    cfg.conv1.filters = std::size_t(filters);
    std::tie(cfg.conv1.kh, cfg.conv1.kw) = parse_pair(key, toks[1]);
    std::tie(cfg.conv1.sh, cfg.conv1.sw) = parse_pair(key, toks[2]);
    const auto pad = parse_pair(key, toks[3]);
    cfg.conv1.ph = pad.first;
    cfg.conv1.pw = pad.second;
  }
  {
    const std::string key = "encoder.pool";
    const auto toks = split_ws(get_str(key));
    if (toks.size() != 3) {
      throw ConfigError(key + ": expected \"KHxKW SHxSW PHxPW\"");
    }
    std::tie(cfg.pool.kh, cfg.pool.kw) = parse_pair(key, toks[0]);
    std::tie(cfg.pool.sh, cfg.pool.sw) = parse_pair(key, toks[1]);
    const auto pad = parse_pair(key, toks[2]);
    cfg.pool.ph = pad.first;
    cfg.pool.pw = pad.second;
  }
  {
    const std::string key = "encoder.blocks";
    const auto toks = split_ws(get_str(key));
    if (toks.empty()) throw ConfigError(key + ": at least one block required");
    cfg.blocks.clear();
    for (const auto& tok : toks) {
      const auto [ch, stride] = parse_pair(key, tok);
      cfg.blocks.push_back({ch, stride});
    }
  }
  std::tie(cfg.grid_freq, cfg.grid_time) =
      parse_pair("encoder.grid", get_str("encoder.grid"));
  const std::int64_t min_time = get_int("encoder.min_time");
  if (min_time <= 0) throw ConfigError("encoder.min_time must be positive");
  cfg.min_time = std::size_t(min_time);
  return cfg;
}

std::size_t PipelineConfig::gat_proj_dim() const {
  const std::int64_t d = get_int("gat.proj_dim");
  if (d <= 0) throw ConfigError("gat.proj_dim must be positive");
  return std::size_t(d);
}

TrainConfig PipelineConfig::train_config() const {
  TrainConfig cfg;
  cfg.lr = get_real("train.lr");
  cfg.weight_decay = get_real("train.weight_decay");
  cfg.decoupled_weight_decay = get_bool("train.decoupled_weight_decay");
  const std::int64_t batch = get_int("train.batch_size");
  const std::int64_t epochs = get_int("train.epochs");
  const std::int64_t seed = get_int("train.seed");
  const std::int64_t mask = get_int("features.mask_max_width");
  if (batch <= 0) throw ConfigError("train.batch_size must be positive");
  if (epochs < 0) throw ConfigError("train.epochs must be nonnegative");
  if (mask < 0) throw ConfigError("features.mask_max_width must be >= 0");
  cfg.batch_size = std::size_t(batch);
  cfg.epochs = std::size_t(epochs);
  cfg.seed = std::uint64_t(seed);
  cfg.mask_max_width = std::size_t(mask);
  cfg.mask_fill_zero = mask_fill_zero();
  return cfg;
}

TdcfCosts PipelineConfig::tdcf_costs() const {
  TdcfCosts costs;
  costs.p_tar = get_real("tdcf.p_tar");
  costs.p_non = get_real("tdcf.p_non");
  costs.p_spoof = get_real("tdcf.p_spoof");
  costs.c_miss_asv = get_real("tdcf.c_miss_asv");
  costs.c_fa_asv = get_real("tdcf.c_fa_asv");
  costs.c_miss_cm = get_real("tdcf.c_miss_cm");
  costs.c_fa_cm = get_real("tdcf.c_fa_cm");
  costs.asv_p_fa = get_real("tdcf.asv_p_fa");
  costs.asv_p_miss = get_real("tdcf.asv_p_miss");
  costs.asv_p_miss_spoof = get_real("tdcf.asv_p_miss_spoof");
  costs.validate();
  return costs;
}

SystemKind PipelineConfig::system() const {
  return system_kind_from_string(get_str("train.system"));
}

std::size_t PipelineConfig::workers() const {
  const std::int64_t w = get_int("run.workers");
  if (w <= 0) throw ConfigError("run.workers must be positive");
  return std::size_t(w);
}

std::size_t PipelineConfig::target_len() const {
  const std::int64_t n = get_int("audio.target_len");
  if (n <= 0) throw ConfigError("audio.target_len must be positive");
  return std::size_t(n);
}

int PipelineConfig::sample_rate() const {
  const std::int64_t sr = get_int("audio.sample_rate");
  if (sr <= 0) throw ConfigError("audio.sample_rate must be positive");
  return int(sr);
}

bool PipelineConfig::mask_fill_zero() const {
  return get_str("features.mask_fill") == "zero";
}

bool PipelineConfig::precision_is_double() const {
  return get_str("train.precision") == "float64";
}

}  // namespace gatspoof
