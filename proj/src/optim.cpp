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

#include "novelview/optim.hpp"

#include <cmath>

#include "novelview/errors.hpp"

namespace novelview {

void Adam::step(const std::vector<Parameter*>& params) {
  ++steps_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const auto lr = static_cast<float>(options_.learning_rate * std::sqrt(c2) / c1);
  const auto eps = static_cast<float>(options_.epsilon * std::sqrt(c2));
  for (Parameter* p : params) {
    const Tensor& g = p->var().grad();
    if (g.empty()) continue;
    Tensor& w = p->var().mutable_value();
    auto [it, inserted] = moments_.try_emplace(p->name());
    if (inserted) it->second = {Tensor(w.shape()), Tensor(w.shape())};
    Tensor& m = it->second.m;
    Tensor& v = it->second.v;
    for (std::int64_t i = 0; i < w.numel(); ++i) {
      m[i] = static_cast<float>(b1) * m[i] + static_cast<float>(1.0 - b1) * g[i];
      v[i] = static_cast<float>(b2) * v[i] + static_cast<float>(1.0 - b2) * g[i] * g[i];
      w[i] -= lr * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

std::map<std::string, Tensor> Adam::state() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, mom] : moments_) {
    out[name + ".m"] = mom.m;
    out[name + ".v"] = mom.v;
  }
  return out;
}

void Adam::load_state(std::int64_t steps, const std::map<std::string, Tensor>& state) {
  steps_ = steps;
  moments_.clear();
  for (const auto& [key, t] : state) {
    if (key.size() < 2 || key[key.size() - 2] != '.') throw IoError("bad optimizer state key '" + key + "'");
    const std::string name = key.substr(0, key.size() - 2);
    const char kind = key.back();
    if (kind == 'm') {
      moments_[name].m = t;
    } else if (kind == 'v') {
      moments_[name].v = t;
    } else {
      throw IoError("bad optimizer state key '" + key + "'");
    }
  }
  for (const auto& [name, mom] : moments_) {
    if (mom.m.shape() != mom.v.shape()) throw IoError("optimizer moments for '" + name + "' disagree in shape");
  }
}

}  // namespace novelview
