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
#include <memory>
#include <string>

#include "novelview/archive.hpp"
#include "novelview/network.hpp"
#include "novelview/optim.hpp"

namespace novelview {

inline constexpr const char* kCheckpointMagic = "NVCKPT01";

/// Everything needed to continue a run or rebuild its generator.
struct Checkpoint {
  ModelConfig model;
  ViewNormalizer normalizer;
  std::int64_t iteration = 0;
  std::string rng_state;
  std::string run_config;  // TrainConfig text of the run
  std::int64_t generator_steps = 0;
  std::int64_t discriminator_steps = 0;
  Archive arrays;          // G/, D/, adam_g/, adam_d/ prefixed tensors

  /// Rebuilds the generator and copies its weights in, checking every shape.
  std::unique_ptr<Generator> make_generator() const;
  /// Copies stored discriminator weights; throws IoError when absent or mismatched.
  void restore(Discriminator& d) const;
  void restore_optimizers(Adam& g, Adam& d) const;
};

struct CheckpointSource {
  const Generator* generator = nullptr;
  const Discriminator* discriminator = nullptr;
  const Adam* generator_optimizer = nullptr;
  const Adam* discriminator_optimizer = nullptr;
  std::int64_t iteration = 0;
  std::string rng_state;
  std::string run_config;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointSource& source);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace novelview
