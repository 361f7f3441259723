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

#include "novelview/parameters.hpp"

#include <cmath>

#include "novelview/errors.hpp"

namespace novelview {

Parameter::Parameter(std::string name, Tensor value) : name_(std::move(name)), var_(std::move(value), true) {}

ag::Var Parameter::use() const {
  reads_.fetch_add(1, std::memory_order_relaxed);
  return var_;
}

Parameter& ParameterSet::add(const std::string& name, Tensor value) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  index_[name] = params_.size();
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  return *params_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParameterSet::with_prefix(std::string_view prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (std::string_view(p->name()).substr(0, prefix.size()) == prefix) out.push_back(p.get());
  }
  return out;
}

std::int64_t ParameterSet::element_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p->var().value().numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->var().zero_grad();
}

void ParameterSet::reset_reads() {
  for (auto& p : params_) p->reset_reads();
}

void ParameterSet::freeze() {
  for (auto& p : params_) p->var().node()->requires_grad = false;
}

Tensor glorot_uniform(Shape shape, std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace novelview
