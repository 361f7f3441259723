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

#include <memory>
#include <string>
#include <vector>

#include "novelview/layers.hpp"
#include "novelview/network.hpp"

namespace novelview {

/// Per-frame feature map used by the perceptual loss. Input and output are
/// (B, T, H, W, C); frames are processed independently.
class FrameFeatureExtractor {
 public:
  virtual ~FrameFeatureExtractor() = default;
  /// Frames are in [-1, 1]; each extractor applies its own input normalisation.
  virtual ag::Var operator()(const ag::Var& frames) const = 0;
  virtual std::string name() const = 0;
};

/// Identity features, for checking the perceptual reduction.
class IdentityFrameFeatures final : public FrameFeatureExtractor {
 public:
  ag::Var operator()(const ag::Var& frames) const override { return frames; }
  std::string name() const override { return "identity"; }
};

/// Fixed-seed three-layer 2D conv net (random, untrained weights).
class TinyFrameFeatures final : public FrameFeatureExtractor {
 public:
  explicit TinyFrameFeatures(std::uint64_t seed = 20240229);
  ag::Var operator()(const ag::Var& frames) const override;
  std::string name() const override { return "tiny2d"; }

 private:
  ParameterSet params_;
  std::vector<Conv3d> convs_;
};

/// VGG-19 up to relu(conv5_2) with weights from an NVWEIGHT archive
/// (arrays vgg.conv<b>_<i>.weight as (1, 3, 3, Ci, Co) and .bias).
/// Frames are mapped to ImageNet statistics and upsampled by an integer
/// factor towards `input_size` (0 keeps the native size).
class Vgg19Conv52 final : public FrameFeatureExtractor {
 public:
  Vgg19Conv52(const std::string& weights_path, int input_size = 224);
  ag::Var operator()(const ag::Var& frames) const override;
  std::string name() const override { return "vgg19_conv5_2"; }
  ParameterSet& params() { return params_; }

 private:
  ParameterSet params_;
  std::vector<std::vector<Conv3d>> blocks_;
  int input_size_;
};

struct PerceptualOptions {
  std::string vgg19_weights;  // empty: no pretrained extractor
  bool desk_fallback = true;  // use TinyFrameFeatures when no weights are available
};

/// Throws ConfigError when weights are missing and the fallback is disabled.
std::unique_ptr<FrameFeatureExtractor> make_perceptual_extractor(const PerceptualOptions& options);

/// Clip-level feature vectors for FVD: (B, T, H, W, 3) -> (B, F).
class ClipFeatureExtractor {
 public:
  virtual ~ClipFeatureExtractor() = default;
  virtual ag::Var operator()(const ag::Var& clips) const = 0;
  virtual std::string name() const = 0;
};

/// Fixed-seed 3D conv net with global average pooling (random, untrained weights).
class TinyClipFeatures final : public ClipFeatureExtractor {
 public:
  explicit TinyClipFeatures(std::uint64_t seed = 19700101);
  ag::Var operator()(const ag::Var& clips) const override;
  std::string name() const override { return "tiny3d"; }

 private:
  ParameterSet params_;
  std::vector<Conv3d> convs_;
};

/// The i3d_modified trunk with external weights, globally average pooled.
class PretrainedClipFeatures final : public ClipFeatureExtractor {
 public:
  explicit PretrainedClipFeatures(const std::string& weights_path);
  ag::Var operator()(const ag::Var& clips) const override;
  std::string name() const override { return "i3d:" + path_; }

 private:
  std::string path_;
  ParameterSet params_;
  std::unique_ptr<VideoEncoder> trunk_;
};

/// Pretrained extractor when `weights_path` names an existing file, else the tiny net.
std::unique_ptr<ClipFeatureExtractor> make_clip_extractor(const std::string& weights_path);

}  // namespace novelview
