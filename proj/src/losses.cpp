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

#include "novelview/losses.hpp"

#include <algorithm>
#include <cmath>

#include "novelview/errors.hpp"

namespace novelview {
namespace {

void check_scores(std::span<const double> s, const char* which) {
  if (s.empty()) throw ShapeError(std::string("no ") + which + " scores");
  for (double v : s) {
    if (!(v > 0.0 && v < 1.0)) {
      throw NumericError(std::string(which) + " score " + std::to_string(v) + " is outside (0, 1)");
    }
  }
}

double mean_log(std::span<const double> s, bool complement) {
  double acc = 0.0;
  for (double v : s) {
    const double c = std::clamp(v, kScoreEpsilon, 1.0 - kScoreEpsilon);
    acc += std::log(complement ? 1.0 - c : c);
  }
  return acc / static_cast<double>(s.size());
}

void check_finite(const ag::Var& scores) {
  for (float v : scores.value().values()) {
    if (!std::isfinite(v)) throw NumericError("non-finite discriminator score");
  }
}

ag::Var one_minus(const ag::Var& x) { return ag::add_scalar(ag::neg(x), 1.0f); }

}  // namespace

void LossWeights::validate() const {
  for (double w : {lambda_r, lambda_p, lambda_adv}) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("loss weights must be finite and non-negative");
  }
}

LossWeights LossWeights::preset(const std::string& name) {
  if (name == "l2") return {1.0, 0.0, 0.0};
  if (name == "lp_ladv") return {0.0, 0.01, 0.01};
  if (name == "l2_lp") return {1.0, 0.01, 0.0};
  if (name == "l2_ladv") return {1.0, 0.0, 0.01};
  if (name == "all") return {1.0, 0.01, 0.01};
  throw ConfigError("unknown loss preset '" + name + "'");
}

std::vector<std::string> LossWeights::preset_names() { return {"l2", "lp_ladv", "l2_lp", "l2_ladv", "all"}; }

LossBreakdown total_loss(double l_r, double l_p, double l_adv, const LossWeights& w) {
  LossBreakdown b{l_r, l_p, l_adv, 0.0};
  if (w.lambda_r != 0.0) b.total += w.lambda_r * l_r;
  if (w.lambda_p != 0.0) b.total += w.lambda_p * l_p;
  if (w.lambda_adv != 0.0) b.total += w.lambda_adv * l_adv;
  return b;
}

double reconstruction_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("reconstruction loss shapes differ: " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pred.numel());
}

ag::Var reconstruction_loss(const ag::Var& pred, const ag::Var& target) {
  if (pred.shape() != target.shape()) throw ShapeError("reconstruction loss shapes differ");
  return ag::mse(pred, target);
}

double perceptual_loss(const Tensor& pred, const Tensor& target, const FrameFeatureExtractor& features) {
  ag::NoGradGuard guard;
  if (pred.shape() != target.shape()) throw ShapeError("perceptual loss shapes differ");
  return reconstruction_loss(features(ag::Var(pred)).value(), features(ag::Var(target)).value());
}

ag::Var perceptual_loss(const ag::Var& pred, const ag::Var& target, const FrameFeatureExtractor& features) {
  if (pred.shape() != target.shape()) throw ShapeError("perceptual loss shapes differ");
  ag::Var target_features;
  {
    ag::NoGradGuard guard;
    target_features = features(target.detach());
  }
  return ag::mse(features(pred), target_features);
}

AdversarialLosses adversarial_losses(std::span<const double> d_real, std::span<const double> d_fake, bool saturating) {
  check_scores(d_real, "real");
  check_scores(d_fake, "fake");
  AdversarialLosses out;
  out.discriminator = -mean_log(d_real, false) - mean_log(d_fake, true);
  out.generator = saturating ? mean_log(d_fake, true) : -mean_log(d_fake, false);
  return out;
}

ag::Var generator_adversarial_loss(const ag::Var& d_fake, bool saturating) {
  check_finite(d_fake);
  const float eps = static_cast<float>(kScoreEpsilon);
  if (saturating) return ag::mean(ag::log_clamped(one_minus(d_fake), eps));
  return ag::neg(ag::mean(ag::log_clamped(d_fake, eps)));
}

ag::Var discriminator_loss(const ag::Var& d_real, const ag::Var& d_fake) {
  check_finite(d_real);
  check_finite(d_fake);
  const float eps = static_cast<float>(kScoreEpsilon);
  const ag::Var real_term = ag::mean(ag::log_clamped(d_real, eps));
  const ag::Var fake_term = ag::mean(ag::log_clamped(one_minus(d_fake), eps));
  return ag::neg(ag::add(real_term, fake_term));
}

}  // namespace novelview
