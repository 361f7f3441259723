// Copyright 2026 The novelview Authors.
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

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "novelview/tensor.hpp"

namespace novelview::ag {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode tape. `backward` reads `grad` and
/// accumulates into the gradients of `inputs`.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward;

  /// Returns the gradient buffer, allocating zeros on first use.
  Tensor& grad_buffer();
};

/// Handle to a value on the tape. Copies share the same node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(std::int64_t axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  /// Gradient accumulated by backward(); empty when none has reached this node.
  const Tensor& grad() const { return node_->grad; }
  void zero_grad();

  /// Reverse sweep from a scalar (or from `seed` for non-scalar roots).
  void backward();
  void backward(const Tensor& seed);

  const NodePtr& node() const { return node_; }

  /// Detached copy of the value (constant on the tape).
  Var detach() const { return Var(node_->value, false); }

 private:
  NodePtr node_;
};

/// Records `backward` on the tape when gradients are enabled and any input
/// requires them; otherwise returns a constant.
Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

bool grad_enabled();

/// Disables tape recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace novelview::ag
