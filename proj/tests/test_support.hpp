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

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "novelview/autograd.hpp"
#include "novelview/ops.hpp"
#include "novelview/random.hpp"

namespace nvtest {

using novelview::Rng;
using novelview::Shape;
using novelview::Tensor;
namespace ag = novelview::ag;

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

/// Compares analytic gradients of sum(f(inputs) * R) against central differences.
inline void expect_gradients(const std::function<ag::Var(const std::vector<ag::Var>&)>& f,
                             const std::vector<Tensor>& inputs, double tol = 2e-2, float eps = 1e-2f,
                             std::uint64_t seed = 7) {
  std::vector<ag::Var> vars;
  for (const auto& t : inputs) vars.emplace_back(t, true);
  const ag::Var out0 = f(vars);
  Rng rng(seed);
  const ag::Var r(random_tensor(out0.shape(), rng), false);
  auto loss_of = [&](const std::vector<ag::Var>& v) {
    const ag::Var y = f(v);
    return ag::scale(ag::mean(ag::mul(y, r)), static_cast<float>(y.value().numel()));
  };
  loss_of(vars).backward();
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    ASSERT_FALSE(vars[k].grad().empty()) << "input " << k << " received no gradient";
    for (std::int64_t i = 0; i < inputs[k].numel(); ++i) {
      std::vector<ag::Var> plus, minus;
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        Tensor tp = inputs[j], tm = inputs[j];
        if (j == k) {
          tp[i] += eps;
          tm[i] -= eps;
        }
        plus.emplace_back(tp, false);
        minus.emplace_back(tm, false);
      }
      const double lp = loss_of(plus).value()[0];
      const double lm = loss_of(minus).value()[0];
      const double numeric = (lp - lm) / (2.0 * eps);
      const double analytic = vars[k].grad()[i];
      EXPECT_NEAR(analytic, numeric, tol * std::max(1.0, std::fabs(numeric))) << "input " << k << " element " << i;
    }
  }
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("novelview_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace nvtest
