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

#ifndef GATSPOOF_AUDIO_IO_HPP
#define GATSPOOF_AUDIO_IO_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gatspoof/errors.hpp"

namespace gatspoof {

/// Mono audio. Samples live in [-1, 1]; the pipeline rejects anything
/// that is not 16 kHz at ingestion time.
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 0;
};

/// One line of a countermeasure protocol file.
struct TrialRecord {
  std::string speaker_id;
  std::string utt_id;
  std::string attack_id;  // "-" for bona fide
  bool bonafide = false;
};

/// Reads a RIFF/WAVE file holding 16-bit signed PCM mono audio.
/// Samples are scaled by 1/32768. Anything else (float WAV, multi
/// channel, other bit depths) raises UnsupportedFormatError rather
/// than being converted silently.
Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Values are rounded to the nearest integer
/// step and clamped to the PCM16 range, so write-then-read moves any
/// in-range sample by at most 1/32768.
void write_wav(const std::filesystem::path& path, const Waveform& w);

/// Truncates to target_len, or tiles the whole waveform end-to-end
/// until target_len samples exist. Output length is always exactly
/// target_len.
Waveform fix_length(const Waveform& w, std::size_t target_len);

/// Parses protocol text: one trial per line, >= 5 whitespace-separated
/// fields (speaker, utt, ignored, attack, key), '#' lines and blank
/// lines skipped. The key is matched case-insensitively against
/// bonafide/spoof and must be consistent with the attack column.
std::vector<TrialRecord> parse_protocol_text(std::string_view text,
                                             const std::string& source_name);
std::vector<TrialRecord> parse_protocol(const std::filesystem::path& path);

std::string serialize_protocol(std::span<const TrialRecord> records);
void write_protocol(const std::filesystem::path& path,
                    std::span<const TrialRecord> records);

}  // namespace gatspoof

#endif  // GATSPOOF_AUDIO_IO_HPP
