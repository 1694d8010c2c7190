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

#ifndef GATSPOOF_SYNTHDATA_HPP
#define GATSPOOF_SYNTHDATA_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "gatspoof/audio_io.hpp"

namespace gatspoof {

/// Synthetic attack families, chosen so attacks differ in spectral
/// versus temporal structure:
///   A01  white noise
///   A02  band-limited noise
///   A03  amplitude-clipped harmonic
inline const std::vector<std::string> kSynthAttacks = {"A01", "A02", "A03"};

struct SynthSpec {
  std::size_t n_bonafide = 1;
  std::size_t n_spoof = 1;
  /// Attack ids cycled round-robin over the spoof utterances.
  std::vector<std::string> attacks = kSynthAttacks;
  std::uint64_t seed = 1;
  std::size_t n_samples = 64600;
  int sample_rate = 16000;
  /// Utterance ids are <prefix>_0001 and so on.
  std::string prefix = "SYN";
};

struct SynthResult {
  std::filesystem::path protocol_path;
  std::vector<TrialRecord> records;
};

/// Writes one WAV per utterance plus "protocol.txt" into out_dir.
/// Bona fide utterances are harmonic tones; every sample is quantized
/// to the 16-bit grid so a write/read round trip is lossless. The same
/// spec yields a bit-identical corpus.
SynthResult generate_corpus(const SynthSpec& spec,
                            const std::filesystem::path& out_dir);

}  // namespace gatspoof

#endif  // GATSPOOF_SYNTHDATA_HPP
