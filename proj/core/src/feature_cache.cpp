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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "gatspoof/features.hpp"

namespace gatspoof {

// Cache layout (all integers and floats little-endian):
//   magic "GSFC0001" (8 bytes)
//   u32 record count
//   per record: u32 id length, id bytes,
//               u32 n_bands, u32 n_frames,
//               f32[n_bands * n_frames] row-major values.
namespace {

constexpr char kMagic[8] = {'G', 'S', 'F', 'C', '0', '0', '0', '1'};

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& s, float f) {
  put_u32(s, std::bit_cast<std::uint32_t>(f));
}

struct Reader {
  const unsigned char* p;
  std::size_t left;
  std::string where;

  void need(std::size_t n) const {
    if (left < n) throw FormatError(where + ": truncated feature cache");
  }
  std::uint32_t u32() {
    need(4);
    const std::uint32_t v = static_cast<std::uint32_t>(p[0]) |
                            static_cast<std::uint32_t>(p[1]) << 8 |
                            static_cast<std::uint32_t>(p[2]) << 16 |
                            static_cast<std::uint32_t>(p[3]) << 24;
    p += 4;
    left -= 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

}  // namespace

void write_feature_cache(const std::filesystem::path& path,
                         std::span<const CachedFeatures> entries) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.features.values.size() != e.features.n_bands * e.features.n_frames) {
      throw ContractError("write_feature_cache: inconsistent shape for \"" +
                          e.utt_id + "\"");
    }
    put_u32(out, static_cast<std::uint32_t>(e.utt_id.size()));
    out += e.utt_id;
    put_u32(out, static_cast<std::uint32_t>(e.features.n_bands));
    put_u32(out, static_cast<std::uint32_t>(e.features.n_frames));
    for (float v : e.features.values) put_f32(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("short write to " + path.string());
}

std::vector<CachedFeatures> read_feature_cache(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> data{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  Reader r{data.data(), data.size(), path.string()};
  r.need(sizeof(kMagic));
  if (std::memcmp(r.p, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": not a feature cache (bad magic)");
  }
  r.p += sizeof(kMagic);
  r.left -= sizeof(kMagic);

  const std::uint32_t count = r.u32();
  std::vector<CachedFeatures> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CachedFeatures e;
    const std::uint32_t id_len = r.u32();
    e.utt_id = r.str(id_len);
    e.features.n_bands = r.u32();
    e.features.n_frames = r.u32();
    const std::size_t n = e.features.n_bands * e.features.n_frames;
    e.features.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) e.features.values[j] = r.f32();
    entries.push_back(std::move(e));
  }
  if (r.left != 0) {
    throw FormatError(path.string() + ": trailing bytes after last record");
  }
  return entries;
}

}  // namespace gatspoof
