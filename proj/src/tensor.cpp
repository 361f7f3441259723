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

#include "novelview/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "novelview/errors.hpp"

namespace novelview {

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + to_string(shape));
    n *= d;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), values_(static_cast<std::size_t>(numel_of(shape_)), fill) {}

Tensor::Tensor(Shape shape, const std::vector<float>& values)
    : Tensor(std::move(shape), FloatBuffer(values.begin(), values.end())) {}

Tensor::Tensor(Shape shape, FloatBuffer values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (static_cast<std::int64_t>(values_.size()) != numel_of(shape_)) {
    throw ShapeError("value count " + std::to_string(values_.size()) + " does not match shape " +
                     to_string(shape_));
  }
}

std::int64_t Tensor::dim(std::int64_t axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
  }
  return shape_[static_cast<std::size_t>(axis)];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (numel_of(shape) != numel()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

void Tensor::fill(float v) { std::fill(values_.begin(), values_.end(), v); }

Tensor Tensor::slice_outer(std::int64_t begin, std::int64_t end) const {
  if (rank() == 0 || begin < 0 || end > shape_[0] || begin > end) {
    throw ShapeError("bad outer slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") of " + to_string(shape_));
  }
  const std::int64_t inner = shape_[0] == 0 ? 0 : numel() / shape_[0];
  Shape s = shape_;
  s[0] = end - begin;
  return Tensor(std::move(s), FloatBuffer(values_.begin() + begin * inner,
                                           values_.begin() + end * inner));
}

Tensor concat_outer(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_outer of no tensors");
  Shape s = parts[0].shape();
  std::int64_t outer = 0;
  FloatBuffer v;
  for (const auto& p : parts) {
    if (p.rank() != static_cast<std::int64_t>(s.size()) ||
        !std::equal(s.begin() + 1, s.end(), p.shape().begin() + 1)) {
      throw ShapeError("concat_outer shape mismatch: " + to_string(s) + " vs " + to_string(p.shape()));
    }
    outer += p.dim(0);
    v.insert(v.end(), p.values().begin(), p.values().end());
  }
  s[0] = outer;
  return Tensor(std::move(s), std::move(v));
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("stack of no tensors");
  Shape s = parts[0].shape();
  FloatBuffer v;
  v.reserve(static_cast<std::size_t>(parts[0].numel()) * parts.size());
  for (const auto& p : parts) {
    if (p.shape() != s) throw ShapeError("stack shape mismatch: " + to_string(s) + " vs " + to_string(p.shape()));
    v.insert(v.end(), p.values().begin(), p.values().end());
  }
  s.insert(s.begin(), static_cast<std::int64_t>(parts.size()));
  return Tensor(std::move(s), std::move(v));
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) throw ShapeError("max_abs_diff shape mismatch");
  float m = 0.0f;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace novelview
