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

#include "gatspoof/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gatspoof/errors.hpp"
#include "gatspoof/rng.hpp"

namespace gatspoof {
namespace {

// Scales to the target peak and snaps every sample onto the 16-bit
// PCM grid, so a WAV write/read round trip reproduces floats exactly.
void normalize_and_quantize(std::vector<float>& x, float peak) {
  float maxabs = 0.0f;
  for (float v : x) maxabs = std::max(maxabs, std::abs(v));
  if (maxabs == 0.0f) maxabs = 1.0f;
  const float scale = peak / maxabs;
  for (float& v : x) {
    long q = std::lrint(double(v) * scale * 32768.0);
    q = std::clamp(q, -32768L, 32767L);
    v = float(double(q) / 32768.0);
  }
}

std::vector<float> harmonic_tone(Rng& rng, std::size_t n, int sr) {
  const double f0 = rng.uniform(100.0, 300.0);
  const double nyquist_cap = 0.475 * double(sr);
  std::vector<double> phases;
  for (std::size_t h = 1; double(h) * f0 < nyquist_cap && h <= 12; ++h) {
    phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  std::vector<float> x(n, 0.0f);
  for (std::size_t h = 0; h < phases.size(); ++h) {
    const double w = 2.0 * std::numbers::pi * f0 * double(h + 1) / double(sr);
    const double amp = 1.0 / double(h + 1);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += float(amp * std::sin(w * double(i) + phases[h]));
    }
  }
  return x;
}

std::vector<float> white_noise(Rng& rng, std::size_t n) {
  std::vector<float> x(n);
  for (auto& v : x) v = float(rng.uniform(-1.0, 1.0));
  return x;
}

std::vector<float> band_noise(Rng& rng, std::size_t n, int sr) {
  // A dense bank of random-phase sines confined to 2.5-5.5 kHz:
  // noise-like in time, band-limited in frequency.
  constexpr std::size_t kComponents = 64;
  std::vector<float> x(n, 0.0f);
  for (std::size_t c = 0; c < kComponents; ++c) {
    const double f = rng.uniform(2500.0, 5500.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double w = 2.0 * std::numbers::pi * f / double(sr);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += float(std::sin(w * double(i) + phase));
    }
  }
  return x;
}

std::vector<float> clipped_harmonic(Rng& rng, std::size_t n, int sr) {
  std::vector<float> x = harmonic_tone(rng, n, sr);
  float maxabs = 0.0f;
  for (float v : x) maxabs = std::max(maxabs, std::abs(v));
  const float limit = 0.3f * maxabs;
  for (float& v : x) v = std::clamp(v, -limit, limit);
  return x;
}

std::string utt_name(const std::string& prefix, char cls, std::size_t idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%04zu", cls, idx + 1);
  return prefix + "_" + buf;
}

}  // namespace

SynthResult generate_corpus(const SynthSpec& spec,
                            const std::filesystem::path& out_dir) {
  if (spec.n_bonafide < 1 || spec.n_spoof < 1) {
    throw ContractError("generate_corpus: need at least one utterance per class");
  }
  if (spec.attacks.empty()) {
    throw ContractError("generate_corpus: attack list is empty");
  }
  for (const auto& a : spec.attacks) {
    if (a.empty() || a == "-" ||
        a.find_first_of(" \t\r\n") != std::string::npos) {
      throw ContractError("generate_corpus: bad attack id \"" + a + "\"");
    }
  }
  if (spec.n_samples == 0 || spec.sample_rate <= 0) {
    throw ContractError("generate_corpus: bad sample count or rate");
  }
  std::filesystem::create_directories(out_dir);

  Rng base(spec.seed);
  SynthResult result;
  const std::string speaker = spec.prefix + "_SPK";

  auto emit = [&](const std::string& utt, std::vector<float> samples,
                  const std::string& attack) {
    normalize_and_quantize(samples, 0.7f);
    write_wav(out_dir / (utt + ".wav"),
              Waveform{std::move(samples), spec.sample_rate});
    result.records.push_back(
        {speaker, utt, attack, attack == "-"});
  };

  std::uint64_t stream = 0;
  for (std::size_t i = 0; i < spec.n_bonafide; ++i) {
    Rng rng = base.fork(stream++);
    emit(utt_name(spec.prefix, 'B', i),
         harmonic_tone(rng, spec.n_samples, spec.sample_rate), "-");
  }
  for (std::size_t i = 0; i < spec.n_spoof; ++i) {
    Rng rng = base.fork(stream++);
    const std::string& attack = spec.attacks[i % spec.attacks.size()];
    std::vector<float> samples;
    if (attack == spec.attacks[0]) {
      samples = white_noise(rng, spec.n_samples);
    } else if (spec.attacks.size() > 1 && attack == spec.attacks[1]) {
      samples = band_noise(rng, spec.n_samples, spec.sample_rate);
    } else {
      samples = clipped_harmonic(rng, spec.n_samples, spec.sample_rate);
    }
    emit(utt_name(spec.prefix, 'S', i), std::move(samples), attack);
  }

  result.protocol_path = out_dir / "protocol.txt";
  write_protocol(result.protocol_path, result.records);
  return result;
}

}  // namespace gatspoof
