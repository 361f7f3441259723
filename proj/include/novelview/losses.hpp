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

#include <span>
#include <string>
#include <vector>

#include "novelview/features.hpp"

namespace novelview {

struct LossWeights {
  double lambda_r = 1.0;
  double lambda_p = 0.01;
  double lambda_adv = 0.01;

  /// Throws ConfigError for negative or non-finite weights.
  void validate() const;

  /// Loss-ablation presets by name: l2, lp_ladv, l2_lp, l2_ladv, all.
  static LossWeights preset(const std::string& name);
  static std::vector<std::string> preset_names();
};

struct LossBreakdown {
  double l_r = 0.0;
  double l_p = 0.0;
  double l_adv = 0.0;
  double total = 0.0;
};

/// Terms with zero weight contribute nothing, whatever their value.
LossBreakdown total_loss(double l_r, double l_p, double l_adv, const LossWeights& weights);

/// Mean squared error, accumulated in double.
double reconstruction_loss(const Tensor& pred, const Tensor& target);
ag::Var reconstruction_loss(const ag::Var& pred, const ag::Var& target);

/// Feature-space mean squared error, averaged over every frame of (B, T, H, W, 3) clips.
double perceptual_loss(const Tensor& pred, const Tensor& target, const FrameFeatureExtractor& features);
ag::Var perceptual_loss(const ag::Var& pred, const ag::Var& target, const FrameFeatureExtractor& features);

constexpr double kScoreEpsilon = 1e-7;

struct AdversarialLosses {
  double generator = 0.0;
  double discriminator = 0.0;
};

/// Scores must lie strictly inside (0, 1); they are clamped to [eps, 1 - eps]
/// before the logs. `saturating` selects mean(log(1 - d_fake)) for the generator
/// instead of -mean(log d_fake).
AdversarialLosses adversarial_losses(std::span<const double> d_real, std::span<const double> d_fake,
                                     bool saturating = false);

ag::Var generator_adversarial_loss(const ag::Var& d_fake, bool saturating = false);
ag::Var discriminator_loss(const ag::Var& d_real, const ag::Var& d_fake);

}  // namespace novelview
