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

#include "novelview/features.hpp"

#include <filesystem>

#include <spdlog/spdlog.h>

#include "novelview/archive.hpp"
#include "novelview/errors.hpp"

namespace novelview {
namespace {

using ag::Triple;
using ag::Var;

// y = x * scale[c] + shift[c] over the last axis.
Var channel_affine(const Var& x, const std::vector<float>& scale, const std::vector<float>& shift) {
  const auto c = x.dim(x.value().rank() - 1);
  Tensor s(x.shape()), b(x.shape());
  for (std::int64_t i = 0; i < s.numel(); ++i) {
    s[i] = scale[static_cast<std::size_t>(i % c)];
    b[i] = shift[static_cast<std::size_t>(i % c)];
  }
  return ag::add(ag::mul(x, Var(std::move(s))), Var(std::move(b)));
}

void require_clips(const Var& x, const char* who) {
  if (x.value().rank() != 5 || x.dim(4) != 3) {
    throw ShapeError(std::string(who) + " expects (B, T, H, W, 3), got " + to_string(x.shape()));
  }
}

}  // namespace

TinyFrameFeatures::TinyFrameFeatures(std::uint64_t seed) {
  Rng rng(seed);
  const std::int64_t widths[] = {3, 16, 32, 32};
  for (int i = 0; i < 3; ++i) {
    convs_.emplace_back(params_, "tiny2d.conv" + std::to_string(i + 1), widths[i], widths[i + 1], Triple{1, 3, 3},
                        Triple{1, 2, 2}, rng);
  }
  params_.freeze();
}

Var TinyFrameFeatures::operator()(const Var& frames) const {
  require_clips(frames, "frame feature extractor");
  Var x = channel_affine(frames, {0.5f, 0.5f, 0.5f}, {0.5f, 0.5f, 0.5f});
  for (const auto& c : convs_) x = ag::leaky_relu(c(x));
  return x;
}

Vgg19Conv52::Vgg19Conv52(const std::string& weights_path, int input_size) : input_size_(input_size) {
  const std::vector<std::vector<std::int64_t>> widths{{64, 64}, {128, 128}, {256, 256, 256, 256}, {512, 512, 512, 512},
                                                      {512, 512}};
  Rng rng(0);
  std::int64_t ch = 3;
  for (std::size_t b = 0; b < widths.size(); ++b) {
    blocks_.emplace_back();
    for (std::size_t i = 0; i < widths[b].size(); ++i) {
      const std::string name = "vgg.conv" + std::to_string(b + 1) + "_" + std::to_string(i + 1);
      blocks_.back().emplace_back(params_, name, ch, widths[b][i], Triple{1, 3, 3}, Triple{1, 1, 1}, rng);
      ch = widths[b][i];
    }
  }
  const Archive a = read_archive(weights_path, "NVWEIGHT");
  for (auto* p : params_.all()) {
    const auto it = a.tensors.find(p->name());
    if (it == a.tensors.end()) throw ConfigError(weights_path + ": missing array '" + p->name() + "'");
    if (it->second.shape() != p->shape()) {
      throw ConfigError(weights_path + ": '" + p->name() + "' has shape " + to_string(it->second.shape()) +
                        ", expected " + to_string(p->shape()));
    }
    p->var().mutable_value() = it->second;
  }
  params_.freeze();
}

Var Vgg19Conv52::operator()(const Var& frames) const {
  require_clips(frames, "VGG-19 features");
  // [-1, 1] -> [0, 1] -> ImageNet standardisation.
  const float mean[] = {0.485f, 0.456f, 0.406f}, sd[] = {0.229f, 0.224f, 0.225f};
  std::vector<float> scale(3), shift(3);
  for (int c = 0; c < 3; ++c) {
    scale[static_cast<std::size_t>(c)] = 0.5f / sd[c];
    shift[static_cast<std::size_t>(c)] = (0.5f - mean[c]) / sd[c];
  }
  Var x = channel_affine(frames, scale, shift);
  if (input_size_ > 0 && frames.dim(2) < input_size_) {
    const int f = static_cast<int>(input_size_ / frames.dim(2));
    if (f > 1) x = ag::upsample_nearest(x, {1, f, f});
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (const auto& c : blocks_[b]) x = ag::relu(c(x));
    if (b + 1 < blocks_.size()) x = ag::max_pool3d(x, {1, 2, 2}, {1, 2, 2});
  }
  return x;
}

std::unique_ptr<FrameFeatureExtractor> make_perceptual_extractor(const PerceptualOptions& options) {
  if (!options.vgg19_weights.empty() && std::filesystem::is_regular_file(options.vgg19_weights)) {
    return std::make_unique<Vgg19Conv52>(options.vgg19_weights);
  }
  if (!options.desk_fallback) {
    throw ConfigError("perceptual loss needs VGG-19 weights ('" + options.vgg19_weights +
                      "' not found) and the desk fallback is disabled");
  }
  if (!options.vgg19_weights.empty()) {
    spdlog::warn("VGG-19 weights '{}' not found; using the tiny fixed-seed feature net", options.vgg19_weights);
  }
  return std::make_unique<TinyFrameFeatures>();
}

TinyClipFeatures::TinyClipFeatures(std::uint64_t seed) {
  Rng rng(seed);
  convs_.emplace_back(params_, "tiny3d.conv1", 3, 16, Triple{3, 3, 3}, Triple{1, 2, 2}, rng);
  convs_.emplace_back(params_, "tiny3d.conv2", 16, 32, Triple{3, 3, 3}, Triple{2, 2, 2}, rng);
  convs_.emplace_back(params_, "tiny3d.conv3", 32, 64, Triple{3, 3, 3}, Triple{2, 2, 2}, rng);
  params_.freeze();
}

Var TinyClipFeatures::operator()(const Var& clips) const {
  require_clips(clips, "clip feature extractor");
  Var x = clips;
  for (const auto& c : convs_) x = ag::leaky_relu(c(x));
  return ag::global_avg_pool(x);
}

PretrainedClipFeatures::PretrainedClipFeatures(const std::string& weights_path) : path_(weights_path) {
  if (!std::filesystem::is_regular_file(weights_path)) {
    throw ConfigError("video feature weights '" + weights_path + "' not found");
  }
  ModelConfig cfg;
  cfg.encoder = EncoderKind::kI3dModified;
  Rng rng(0);
  trunk_ = make_encoder(cfg, params_, rng);
  const Archive a = read_archive(weights_path, "NVWEIGHT");
  for (auto* p : params_.all()) {
    const auto it = a.tensors.find(p->name());
    if (it == a.tensors.end()) throw ConfigError(weights_path + ": missing array '" + p->name() + "'");
    if (it->second.shape() != p->shape()) throw ConfigError(weights_path + ": shape mismatch for '" + p->name() + "'");
    p->var().mutable_value() = it->second;
  }
  params_.freeze();
}

Var PretrainedClipFeatures::operator()(const Var& clips) const {
  require_clips(clips, "clip feature extractor");
  return ag::global_avg_pool((*trunk_)(clips));
}

std::unique_ptr<ClipFeatureExtractor> make_clip_extractor(const std::string& weights_path) {
  if (!weights_path.empty()) {
    if (std::filesystem::is_regular_file(weights_path)) return std::make_unique<PretrainedClipFeatures>(weights_path);
    spdlog::warn("video feature weights '{}' not found; using the tiny fixed-seed 3D net", weights_path);
  }
  return std::make_unique<TinyClipFeatures>();
}

}  // namespace novelview
