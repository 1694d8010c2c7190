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

#ifndef GATSPOOF_CHECKPOINT_HPP
#define GATSPOOF_CHECKPOINT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "gatspoof/ad/tensor.hpp"

namespace gatspoof {

/// Named registry of learnable tensors plus non-learnable buffers
/// (batch-norm running statistics). Modules register at construction;
/// the optimizer and checkpoint code iterate it in registration order.
template <typename T>
class ParamStore {
 public:
  struct Param {
    std::string name;
    ad::Tensor<T> tensor;
  };
  struct Buffer {
    std::string name;
    std::vector<T>* data;  // owned by the registering module
  };

  /// Registers a zero-initialized parameter with requires_grad set.
  ad::Tensor<T> add(const std::string& name, ad::Shape shape) {
    check_new_name(name);
    ad::Tensor<T> t(std::move(shape));
    t.set_requires_grad(true);
    params_.push_back({name, t});
    return t;
  }

  /// Registers external storage (the pointee must outlive the store).
  void register_buffer(const std::string& name, std::vector<T>* data) {
    check_new_name(name);
    buffers_.push_back({name, data});
  }

  const std::vector<Param>& params() const { return params_; }
  const std::vector<Buffer>& buffers() const { return buffers_; }

  /// Lookup for tests and diagnostics; throws on unknown name.
  ad::Tensor<T> find(const std::string& name) const {
    for (const auto& p : params_) {
      if (p.name == name) return p.tensor;
    }
    throw ContractError("ParamStore: no parameter named \"" + name + "\"");
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  /// Flat snapshot of every parameter and buffer, for in-memory
  /// best-checkpoint bookkeeping.
  std::vector<std::vector<T>> snapshot() const {
    std::vector<std::vector<T>> s;
    s.reserve(params_.size() + buffers_.size());
    for (const auto& p : params_) {
      auto v = p.tensor.value();
      s.emplace_back(v.begin(), v.end());
    }
    for (const auto& b : buffers_) s.push_back(*b.data);
    return s;
  }

  void restore(const std::vector<std::vector<T>>& s) {
    if (s.size() != params_.size() + buffers_.size()) {
      throw ContractError("ParamStore: snapshot entry count mismatch");
    }
    std::size_t i = 0;
    for (auto& p : params_) {
      auto v = p.tensor.value();
      if (s[i].size() != v.size()) {
        throw ContractError("ParamStore: snapshot size mismatch for \"" +
                            p.name + "\"");
      }
      std::copy(s[i].begin(), s[i].end(), v.begin());
      ++i;
    }
    for (auto& b : buffers_) {
      if (s[i].size() != b.data->size()) {
        throw ContractError("ParamStore: snapshot size mismatch for \"" +
                            b.name + "\"");
      }
      *b.data = s[i];
      ++i;
    }
  }

 private:
  void check_new_name(const std::string& name) {
    for (const auto& p : params_) {
      if (p.name == name) {
        throw ContractError("ParamStore: duplicate name \"" + name + "\"");
      }
    }
    for (const auto& b : buffers_) {
      if (b.name == name) {
        throw ContractError("ParamStore: duplicate name \"" + name + "\"");
      }
    }
  }

  std::vector<Param> params_;
  std::vector<Buffer> buffers_;
};

/// Checkpoint files hold every parameter and buffer as named entries
/// with 64-bit little-endian float payloads, independent of the
/// in-memory precision. Loading validates entry order, names, and
/// shapes against the receiving store.
template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const ParamStore<T>& store);
template <typename T>
void load_checkpoint(const std::filesystem::path& path, ParamStore<T>& store);

}  // namespace gatspoof

#endif  // GATSPOOF_CHECKPOINT_HPP
