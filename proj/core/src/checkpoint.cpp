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

#include "gatspoof/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "gatspoof/errors.hpp"

namespace gatspoof {
namespace {

constexpr char kMagic[8] = {'G', 'S', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
  const unsigned char* p;
  std::size_t left;
  std::string where;

  void need(std::size_t n) const {
    if (left < n) throw FormatError(where + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

struct Entry {
  std::string name;
  ad::Shape shape;
  const double* values;  // view into decoded storage
};

template <typename T>
void append_entry(std::string& out, const std::string& name,
                  const ad::Shape& shape, const T* data, std::size_t n) {
  put_u32(out, std::uint32_t(name.size()));
  out.append(name);
  put_u32(out, std::uint32_t(shape.size()));
  for (std::size_t d : shape) put_u64(out, d);
  for (std::size_t i = 0; i < n; ++i) put_f64(out, double(data[i]));
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const ParamStore<T>& store) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, std::uint32_t(store.params().size() + store.buffers().size()));
  for (const auto& p : store.params()) {
    auto v = p.tensor.value();
    append_entry(out, p.name, p.tensor.shape(), v.data(), v.size());
  }
  for (const auto& b : store.buffers()) {
    append_entry(out, b.name, ad::Shape{b.data->size()}, b.data->data(),
                 b.data->size());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("save_checkpoint: cannot open " + path.string());
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw Error("save_checkpoint: write failed for " + path.string());
}

template <typename T>
void load_checkpoint(const std::filesystem::path& path, ParamStore<T>& store) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("load_checkpoint: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  Reader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
           "load_checkpoint"};
  std::string magic = r.str(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("load_checkpoint: bad magic in " + path.string());
  }
  std::size_t n_entries = r.u32();
  std::size_t expected = store.params().size() + store.buffers().size();
  if (n_entries != expected) {
    throw FormatError("load_checkpoint: checkpoint has " +
                      std::to_string(n_entries) + " entries, store expects " +
                      std::to_string(expected));
  }

  auto read_into = [&](const std::string& name, const ad::Shape& shape,
                       T* dst, std::size_t n) {
    std::size_t name_len = r.u32();
    std::string got = r.str(name_len);
    if (got != name) {
      throw FormatError("load_checkpoint: entry \"" + got +
                        "\" where \"" + name + "\" was expected");
    }
    std::size_t ndim = r.u32();
    ad::Shape got_shape(ndim);
    for (std::size_t i = 0; i < ndim; ++i) got_shape[i] = r.u64();
    if (got_shape != shape) {
      throw FormatError("load_checkpoint: shape mismatch for \"" + name +
                        "\": file has " + ad::shape_str(got_shape) +
                        ", store expects " + ad::shape_str(shape));
    }
    for (std::size_t i = 0; i < n; ++i) dst[i] = T(r.f64());
  };

  for (const auto& p : store.params()) {
    ad::Tensor<T> t = p.tensor;  // non-const handle to shared storage
    auto v = t.value();
    read_into(p.name, t.shape(), v.data(), v.size());
  }
  for (const auto& b : store.buffers()) {
    read_into(b.name, ad::Shape{b.data->size()}, b.data->data(),
              b.data->size());
  }
  if (r.left != 0) {
    throw FormatError("load_checkpoint: trailing bytes in " + path.string());
  }
}

template void save_checkpoint<float>(const std::filesystem::path&,
                                     const ParamStore<float>&);
template void save_checkpoint<double>(const std::filesystem::path&,
                                      const ParamStore<double>&);
template void load_checkpoint<float>(const std::filesystem::path&,
                                     ParamStore<float>&);
template void load_checkpoint<double>(const std::filesystem::path&,
                                      ParamStore<double>&);

}  // namespace gatspoof
