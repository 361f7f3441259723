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

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "novelview/autograd.hpp"
#include "novelview/random.hpp"

namespace novelview {

/// A named trainable array. Forward passes read it through use(), which is
/// counted so tests can prove a branch never touched a parameter.
class Parameter {
 public:
  Parameter(std::string name, Tensor value);

  const std::string& name() const { return name_; }
  const Shape& shape() const { return var_.shape(); }

  /// Traced read for use in a forward computation.
  ag::Var use() const;
  /// Untraced access for optimizers and serialization.
  ag::Var& var() { return var_; }
  const ag::Var& var() const { return var_; }

  std::uint64_t reads() const { return reads_.load(std::memory_order_relaxed); }
  void reset_reads() { reads_.store(0, std::memory_order_relaxed); }

 private:
  std::string name_;
  ag::Var var_;
  mutable std::atomic<std::uint64_t> reads_{0};
};

/// Insertion-ordered collection of uniquely named parameters with stable addresses.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  /// Parameters whose name starts with `prefix`.
  std::vector<Parameter*> with_prefix(std::string_view prefix);

  std::size_t size() const { return params_.size(); }
  std::int64_t element_count() const;

  void zero_grad();
  void reset_reads();
  /// Marks every parameter as a constant (no gradient is recorded for it).
  void freeze();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

/// Glorot-uniform tensor for the given fan sizes.
Tensor glorot_uniform(Shape shape, std::int64_t fan_in, std::int64_t fan_out, Rng& rng);

}  // namespace novelview
