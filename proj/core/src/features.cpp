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

#include "gatspoof/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace gatspoof {

namespace {

// Iterative radix-2 decimation-in-time FFT. Hand-rolled so the whole
// DSP path is dependency-free and bit-reproducible.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> make_window(WindowKind kind, std::size_t len) {
  std::vector<double> w(len, 1.0);
  if (kind == WindowKind::kHann) {
    // Periodic Hann: denominator len, not len-1.
    for (std::size_t i = 0; i < len; ++i) {
      w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                   static_cast<double>(i) /
                                   static_cast<double>(len)));
    }
  }
  return w;
}

}  // namespace

RealMatrix stft_power(const Waveform& w, const StftConfig& cfg) {
  if (w.sample_rate <= 0) {
    throw ContractError("stft_power: waveform has no sample rate");
  }
  if (cfg.n_fft == 0 || (cfg.n_fft & (cfg.n_fft - 1)) != 0) {
    throw ConfigError("stft_power: n_fft must be a power of two, got " +
                      std::to_string(cfg.n_fft));
  }
  const std::size_t win = cfg.win_len(w.sample_rate);
  const std::size_t hop = cfg.hop_len(w.sample_rate);
  if (win == 0 || hop == 0) {
    throw ConfigError("stft_power: window/hop shorter than one sample");
  }
  if (win > cfg.n_fft) {
    throw ConfigError("stft_power: window of " + std::to_string(win) +
                      " samples exceeds n_fft " + std::to_string(cfg.n_fft));
  }
  if (w.samples.size() < win) {
    throw ShapeError("stft_power: waveform of " +
                     std::to_string(w.samples.size()) +
                     " samples is shorter than one " + std::to_string(win) +
                     "-sample window");
  }

  const std::size_t n_frames = (w.samples.size() - win) / hop + 1;
  const std::size_t n_bins = cfg.n_bins();
  const auto window = make_window(cfg.window, win);
  RealMatrix out(n_bins, n_frames);
  std::vector<std::complex<double>> buf(cfg.n_fft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const float* frame = w.samples.data() + t * hop;
    for (std::size_t i = 0; i < win; ++i) {
      buf[i] = std::complex<double>(static_cast<double>(frame[i]) * window[i],
                                    0.0);
    }
    std::fill(buf.begin() + static_cast<std::ptrdiff_t>(win), buf.end(),
              std::complex<double>(0.0, 0.0));
    fft_inplace(buf);
    for (std::size_t k = 0; k < n_bins; ++k) {
      out.at(k, t) = std::norm(buf[k]);
    }
  }
  return out;
}

RealMatrix linear_filterbank(std::size_t n_bands, std::size_t n_bins,
                             double f_max) {
  if (n_bands < 1) throw ConfigError("linear_filterbank: n_bands must be >= 1");
  if (n_bins < 2) throw ConfigError("linear_filterbank: n_bins must be >= 2");
  if (f_max <= 0) throw ConfigError("linear_filterbank: f_max must be > 0");
  // Band k rises over [edge_k, edge_{k+1}] and falls over
  // [edge_{k+1}, edge_{k+2}] with peak 1 at its center edge_{k+1};
  // sharing each half-support with a neighbor gives the 50% overlap.
  const double step = f_max / static_cast<double>(n_bands + 1);
  const double bin_hz = f_max / static_cast<double>(n_bins - 1);
  RealMatrix fb(n_bands, n_bins);
  for (std::size_t k = 0; k < n_bands; ++k) {
    const double left = static_cast<double>(k) * step;
    const double center = left + step;
    const double right = center + step;
    for (std::size_t i = 0; i < n_bins; ++i) {
      const double f = static_cast<double>(i) * bin_hz;
      const double rise = (f - left) / step;
      const double fall = (right - f) / step;
      fb.at(k, i) = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

FeatureMap lfb(const Waveform& w, const LfbConfig& cfg) {
  const RealMatrix power = stft_power(w, cfg.stft);
  const RealMatrix fb = linear_filterbank(
      cfg.n_bands, power.rows, static_cast<double>(w.sample_rate) / 2.0);
  FeatureMap out;
  out.n_bands = cfg.n_bands;
  out.n_frames = power.cols;
  out.values.resize(cfg.n_bands * power.cols);
  for (std::size_t b = 0; b < cfg.n_bands; ++b) {
    for (std::size_t t = 0; t < power.cols; ++t) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.rows; ++k) {
        e += fb.at(b, k) * power.at(k, t);
      }
      out.values[b * power.cols + t] =
          static_cast<float>(std::log(std::max(e, cfg.log_floor)));
    }
  }
  return out;
}

FreqMask sample_freq_mask(Rng& rng, std::size_t n_bands,
                          std::size_t max_width) {
  if (max_width > n_bands) {
    throw ContractError("sample_freq_mask: max_width " +
                        std::to_string(max_width) + " exceeds n_bands " +
                        std::to_string(n_bands));
  }
  FreqMask m;
  m.width = rng.uniform_int(max_width + 1);
  m.start_band = rng.uniform_int(n_bands - m.width + 1);
  return m;
}

void apply_freq_mask(FeatureMap& f, const FreqMask& m, float fill) {
  if (m.start_band + m.width > f.n_bands) {
    throw ContractError("apply_freq_mask: mask [" +
                        std::to_string(m.start_band) + ", " +
                        std::to_string(m.start_band + m.width) +
                        ") exceeds " + std::to_string(f.n_bands) + " bands");
  }
  for (std::size_t b = m.start_band; b < m.start_band + m.width; ++b) {
    std::fill_n(f.values.begin() + static_cast<std::ptrdiff_t>(b * f.n_frames),
                f.n_frames, fill);
  }
}

float feature_mean(const FeatureMap& f) {
  if (f.values.empty()) throw ContractError("feature_mean: empty feature map");
  double acc = 0.0;
  for (float v : f.values) acc += static_cast<double>(v);
  return static_cast<float>(acc / static_cast<double>(f.values.size()));
}

}  // namespace gatspoof
