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

#include "gatspoof/audio_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace gatspoof {

namespace {

// WAV I/O below assembles multi-byte fields explicitly from bytes, so
// it is endian-agnostic.
std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] |
                                    static_cast<std::uint16_t>(p[1]) << 8);
}

void append_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void append_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> data{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return data;
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  const auto data = read_file(path);
  const std::string where = path.string();
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(where + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* pcm = nullptr;
  std::uint32_t pcm_bytes = 0;

  std::size_t off = 12;
  while (off + 8 <= data.size()) {
    const char* id = reinterpret_cast<const char*>(data.data() + off);
    const std::uint32_t chunk_size = read_u32(data.data() + off + 4);
    const std::size_t body = off + 8;
    if (body + chunk_size > data.size()) {
      throw FormatError(where + ": truncated chunk");
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError(where + ": short fmt chunk");
      audio_format = read_u16(data.data() + body);
      channels = read_u16(data.data() + body + 2);
      sample_rate = read_u32(data.data() + body + 4);
      bits = read_u16(data.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      pcm = data.data() + body;
      pcm_bytes = chunk_size;
    }
    // Chunks are word-aligned; odd sizes carry one pad byte.
    off = body + chunk_size + (chunk_size & 1);
  }

  if (!have_fmt || pcm == nullptr) {
    throw FormatError(where + ": missing fmt or data chunk");
  }
  if (audio_format != 1) {
    throw UnsupportedFormatError(where + ": WAV format tag " +
                                 std::to_string(audio_format) +
                                 " (only 16-bit PCM is supported)");
  }
  if (bits != 16) {
    throw UnsupportedFormatError(where + ": " + std::to_string(bits) +
                                 "-bit samples (only 16-bit is supported)");
  }
  if (channels != 1) {
    throw UnsupportedFormatError(where + ": " + std::to_string(channels) +
                                 " channels (mono only, no downmixing)");
  }
  if (pcm_bytes % 2 != 0) throw FormatError(where + ": odd PCM byte count");

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.samples.resize(pcm_bytes / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const std::int16_t s =
        static_cast<std::int16_t>(read_u16(pcm + 2 * i));
    w.samples[i] = static_cast<float>(s) / 32768.0f;
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  if (w.sample_rate <= 0) {
    throw ContractError("write_wav: sample rate must be positive");
  }
  const std::uint32_t nbytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + nbytes);
  out += "RIFF";
  append_u32(out, 36 + nbytes);
  out += "WAVE";
  out += "fmt ";
  append_u32(out, 16);
  append_u16(out, 1);  // PCM
  append_u16(out, 1);  // mono
  append_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  append_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  append_u16(out, 2);   // block align
  append_u16(out, 16);  // bits
  out += "data";
  append_u32(out, nbytes);
  for (float x : w.samples) {
    const long v = std::lrint(static_cast<double>(x) * 32768.0);
    const std::int16_t s = static_cast<std::int16_t>(
        std::clamp(v, -32768L, 32767L));
    append_u16(out, static_cast<std::uint16_t>(s));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("short write to " + path.string());
}

Waveform fix_length(const Waveform& w, std::size_t target_len) {
  if (target_len == 0) throw ContractError("fix_length: target_len must be > 0");
  if (w.samples.empty()) throw ContractError("fix_length: empty waveform");
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(target_len);
  for (std::size_t i = 0; i < target_len; ++i) {
    out.samples[i] = w.samples[i % w.samples.size()];
  }
  return out;
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

}  // namespace

std::vector<TrialRecord> parse_protocol_text(std::string_view text,
                                             const std::string& source_name) {
  std::vector<TrialRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::istringstream fields{std::string(line)};
    std::string speaker, utt, ignored, attack, key;
    if (!(fields >> speaker)) continue;  // blank line
    if (speaker[0] == '#') continue;
    const std::string at = source_name + " line " + std::to_string(line_no);
    if (!(fields >> utt >> ignored >> attack >> key)) {
      throw ParseError(at + ": expected at least 5 fields");
    }
    TrialRecord r;
    r.speaker_id = speaker;
    r.utt_id = utt;
    r.attack_id = attack;
    const std::string k = lower(key);
    if (k == "bonafide") {
      r.bonafide = true;
    } else if (k == "spoof") {
      r.bonafide = false;
    } else {
      throw ParseError(at + ": unknown key token \"" + key + "\"");
    }
    if (r.bonafide != (r.attack_id == "-")) {
      throw ParseError(at + ": key \"" + k + "\" inconsistent with attack \"" +
                       r.attack_id + "\"");
    }
    if (!seen.insert(r.utt_id).second) {
      throw ParseError(at + ": duplicate utt_id \"" + r.utt_id + "\"");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<TrialRecord> parse_protocol(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open protocol " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_protocol_text(ss.str(), path.filename().string());
}

std::string serialize_protocol(std::span<const TrialRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += r.speaker_id;
    out += ' ';
    out += r.utt_id;
    out += " - ";
    out += r.attack_id;
    out += ' ';
    out += r.bonafide ? "bonafide" : "spoof";
    out += '\n';
  }
  return out;
}

void write_protocol(const std::filesystem::path& path,
                    std::span<const TrialRecord> records) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  const std::string text = serialize_protocol(records);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw FormatError("short write to " + path.string());
}

}  // namespace gatspoof
