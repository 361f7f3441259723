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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace novelview {

using Shape = std::vector<std::int64_t>;

/// 64-byte aligned storage, so Eigen kernels see the same operand alignment
/// on every run and results stay bit-reproducible.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlignment)));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t(kAlignment)); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

std::int64_t numel_of(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major float32 array. Video tensors use the channels-last layout
/// (B, T, H, W, C); single clips drop the leading batch axis.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, const std::vector<float>& values);
  Tensor(Shape shape, FloatBuffer values);

  const Shape& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(std::int64_t axis) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(values_.size()); }
  bool empty() const { return values_.empty(); }

  float* data() { return values_.data(); }
  const float* data() const { return values_.data(); }
  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  float& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
  float operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

  /// Same storage reinterpreted with a new shape of equal element count.
  Tensor reshaped(Shape shape) const;
  void fill(float v);

  /// Slice [begin, end) along axis 0.
  Tensor slice_outer(std::int64_t begin, std::int64_t end) const;

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

 private:
  Shape shape_;
  FloatBuffer values_;
};

/// Concatenates tensors of identical trailing shape along axis 0.
Tensor concat_outer(std::span<const Tensor> parts);

/// Stacks equally shaped tensors into a new leading axis.
Tensor stack(std::span<const Tensor> parts);

bool same_shape(const Tensor& a, const Tensor& b);
float max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace novelview
