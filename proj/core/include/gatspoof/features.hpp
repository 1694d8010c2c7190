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

#ifndef GATSPOOF_FEATURES_HPP
#define GATSPOOF_FEATURES_HPP

#include <cstddef>
#include <vector>

#include "gatspoof/audio_io.hpp"
#include "gatspoof/rng.hpp"

namespace gatspoof {

/// Log filterbank energies, row-major [n_bands x n_frames]. Stored in
/// single precision; all DSP up to here runs in double.
struct FeatureMap {
  std::size_t n_bands = 0;
  std::size_t n_frames = 0;
  std::vector<float> values;

  float& at(std::size_t band, std::size_t frame) {
    return values[band * n_frames + frame];
  }
  float at(std::size_t band, std::size_t frame) const {
    return values[band * n_frames + frame];
  }
};

/// Row-major double matrix for the DSP intermediates.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  RealMatrix() = default;
  RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c) {}
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

enum class WindowKind { kHann, kRect };

struct StftConfig {
  int win_ms = 30;
  int hop_ms = 10;
  std::size_t n_fft = 512;
  WindowKind window = WindowKind::kHann;

  std::size_t win_len(int sample_rate) const {
    return static_cast<std::size_t>(sample_rate) *
           static_cast<std::size_t>(win_ms) / 1000;
  }
  std::size_t hop_len(int sample_rate) const {
    return static_cast<std::size_t>(sample_rate) *
           static_cast<std::size_t>(hop_ms) / 1000;
  }
  std::size_t n_bins() const { return n_fft / 2 + 1; }
};

struct LfbConfig {
  StftConfig stft;
  std::size_t n_bands = 60;
  double log_floor = 1e-30;
};

/// Power spectrogram |STFT|^2, [n_bins x n_frames]. Frames start at
/// sample 0 with no centering: n_frames = floor((len - win)/hop) + 1.
RealMatrix stft_power(const Waveform& w, const StftConfig& cfg);

/// Triangular filters with peak 1, centers linearly spaced on
/// (0, f_max) so adjacent filters overlap by half their support.
/// Rows are [n_bands], columns the n_bins FFT bins up to f_max.
RealMatrix linear_filterbank(std::size_t n_bands, std::size_t n_bins,
                             double f_max);

/// Full chain: stft_power -> filterbank -> log(max(., log_floor)).
FeatureMap lfb(const Waveform& w, const LfbConfig& cfg);

struct FreqMask {
  std::size_t start_band = 0;
  std::size_t width = 0;

  bool operator==(const FreqMask&) const = default;
};

/// Width is uniform on {0..max_width}, start uniform on
/// {0..n_bands-width}; the same mask is later shared by a mini-batch.
FreqMask sample_freq_mask(Rng& rng, std::size_t n_bands,
                          std::size_t max_width);

/// Replaces rows [start, start+width) with fill, in place.
void apply_freq_mask(FeatureMap& f, const FreqMask& m, float fill);

/// Mean over all entries; the default mask fill value.
float feature_mean(const FeatureMap& f);

/// In-order binary cache of per-utterance feature maps.
struct CachedFeatures {
  std::string utt_id;
  FeatureMap features;
};

void write_feature_cache(const std::filesystem::path& path,
                         std::span<const CachedFeatures> entries);
std::vector<CachedFeatures> read_feature_cache(
    const std::filesystem::path& path);

}  // namespace gatspoof

#endif  // GATSPOOF_FEATURES_HPP
