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

#ifndef GATSPOOF_AD_TENSOR_HPP
#define GATSPOOF_AD_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gatspoof/errors.hpp"

namespace gatspoof::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major buffer shared between tensor handles. Gradient
/// storage stays empty until backward (or ensure_grad) touches it.
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
  }
};

/// Value-semantic handle to a shared TensorNode. Copying a Tensor
/// aliases the same buffer; ops always allocate fresh nodes.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : node_(std::make_shared<TensorNode<T>>()) {
    node_->value.assign(shape_numel(shape), fill);
    node_->shape = std::move(shape);
  }

  Tensor(Shape shape, std::vector<T> data)
      : node_(std::make_shared<TensorNode<T>>()) {
    if (data.size() != shape_numel(shape)) {
      throw ShapeError("tensor data size " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    node_->shape = std::move(shape);
    node_->value = std::move(data);
  }

  static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->value.size(); }

  std::span<T> value() { return node_->value; }
  std::span<const T> value() const { return node_->value; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }

  /// Value of a 0-d or 1-element tensor.
  T item() const {
    if (size() != 1) {
      throw ContractError("item() called on tensor of shape " +
                          shape_str(shape()));
    }
    return node_->value[0];
  }

  Tensor& set_requires_grad(bool b = true) {
    node_->requires_grad = b;
    return *this;
  }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  void zero_grad() {
    if (node_) node_->grad.clear();
  }

  const std::shared_ptr<TensorNode<T>>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

/// Linear record of backward closures in execution order. Ops append
/// to the innermost active tape; backward() replays in reverse. Tapes
/// nest lexically via Scope, and each scalar type has its own
/// thread-local active tape.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  class Scope {
   public:
    explicit Scope(Tape& tape) : prev_(active_) { active_ = &tape; }
    ~Scope() { active_ = prev_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  static Tape* active() { return active_; }

  void record(std::function<void()> backward_step) {
    steps_.push_back(std::move(backward_step));
  }

  std::size_t size() const { return steps_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
  /// Fails on non-scalar losses; gradients accumulate, so callers
  /// reusing parameters across backward passes must zero_grad first.
  void backward(Tensor<T>& loss) {
    if (loss.size() != 1) {
      throw ContractError("backward() requires a scalar loss, got shape " +
                          shape_str(loss.shape()));
    }
    loss.mutable_grad()[0] = T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  }

  void clear() { steps_.clear(); }

 private:
  static thread_local Tape* active_;
  std::vector<std::function<void()>> steps_;
};

template <typename T>
thread_local Tape<T>* Tape<T>::active_ = nullptr;

/// True when an op invoked now should record a backward step for
/// these inputs: some input wants gradients and a tape is listening.
template <typename T>
bool tracing(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::active() == nullptr) return false;
  for (const Tensor<T>* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

}  // namespace gatspoof::ad

#endif  // GATSPOOF_AD_TENSOR_HPP
