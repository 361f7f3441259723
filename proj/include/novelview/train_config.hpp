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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "novelview/dataset.hpp"
#include "novelview/losses.hpp"
#include "novelview/metrics.hpp"
#include "novelview/model_config.hpp"
#include "novelview/optim.hpp"

namespace novelview {

struct EvalSettings {
  std::vector<std::string> inputs;   // empty: first n_train cameras of the first panel
  std::vector<std::string> queries;  // empty: the remaining cameras of that panel
  int offset = 0;
  MetricSet metrics;
  std::string clip_weights;                // pretrained video network for FVD; empty: tiny net
  std::filesystem::path checkpoint;        // empty: <out>/checkpoints/final.nvc
};

/// Everything a training or evaluation run depends on. Text form is one
/// `section.key = value` per line; unknown keys are errors.
struct TrainConfig {
  std::filesystem::path dataset;
  Grouping grouping = Grouping::kPanel;
  ModelConfig model = ModelConfig::desk();
  LossWeights loss;
  bool saturating = false;
  std::string vgg19_weights;
  bool desk_fallback = true;
  std::string optimizer = "adam";
  AdamOptions adam;
  int batch = 4;
  int iterations = 1000;
  std::uint64_t seed = 1;
  std::filesystem::path out = "runs/default";
  int checkpoint_every = 100;
  int eval_every = 0;
  EvalSettings eval;

  void validate() const;
  SamplingProtocol protocol() const { return {model.n_train, grouping, model.clip_frames}; }
  /// Model configuration with the run seed applied.
  ModelConfig seeded_model() const;
  std::filesystem::path checkpoint_dir() const { return out / "checkpoints"; }
  std::filesystem::path loss_log() const { return out / "loss_log.csv"; }
  std::filesystem::path final_checkpoint() const { return checkpoint_dir() / "final.nvc"; }
  std::filesystem::path full_checkpoint() const { return eval.checkpoint.empty() ? final_checkpoint() : eval.checkpoint; }

  void set(const std::string& key, const std::string& value);
  std::string format() const;
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);
};

std::string to_string(Grouping g);
Grouping parse_grouping(const std::string& text);
MetricSet parse_metric_set(const std::string& text);
std::string to_string(const MetricSet& m);

}  // namespace novelview
