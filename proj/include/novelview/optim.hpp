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

#include <map>
#include <string>
#include <vector>

#include "novelview/parameters.hpp"

namespace novelview {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over a named parameter group. Parameters with no gradient this step
/// are left untouched (and their moments are not advanced).
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(const std::vector<Parameter*>& params);
  std::int64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }

  /// Moment buffers keyed "<param>.m" / "<param>.v", for checkpoints.
  std::map<std::string, Tensor> state() const;
  void load_state(std::int64_t steps, const std::map<std::string, Tensor>& state);

 private:
  struct Moments {
    Tensor m, v;
  };
  AdamOptions options_;
  std::int64_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace novelview
