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

#include "novelview/dataset.hpp"
#include "novelview/layers.hpp"
#include "novelview/model_config.hpp"

namespace novelview {

/// A batch for the generator. Views are raw (unnormalised) vectors.
struct GeneratorInput {
  std::vector<Tensor> clips;  // N x (B, T, H, W, 3)
  std::vector<Tensor> views;  // N x (B, d)
  Tensor query_view;          // (B, d)

  std::int64_t batch() const { return query_view.dim(0); }
  int frames() const { return static_cast<int>(clips.front().dim(1)); }
};

/// Stacks examples (equal N and clip shape) into one batch; targets go to `target` if given.
GeneratorInput make_generator_input(const std::vector<const TrainingExample*>& examples, Tensor* target = nullptr);
GeneratorInput make_generator_input(const std::vector<TrainingExample>& examples, Tensor* target = nullptr);

/// Video encoder V_E mapping (B, T, H, W, 3) to (B, T/ft, H/fs, W/fs, C_e).
class VideoEncoder {
 public:
  virtual ~VideoEncoder() = default;
  virtual ag::Var operator()(const ag::Var& clip) const = 0;
};

std::unique_ptr<VideoEncoder> make_encoder(const ModelConfig& cfg, ParameterSet& params, Rng& rng);

/// The dual-representation generator. Parameter prefixes: encoder., gr., vd.,
/// query., decoder.
class Generator {
 public:
  explicit Generator(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  bool has_global_branch() const { return cfg_.ablation != AblationMode::kVdOnly; }
  bool has_view_dependent_branch() const { return cfg_.ablation != AblationMode::kGrOnly; }

  const ViewNormalizer& normalizer() const { return normalizer_; }
  void set_normalizer(ViewNormalizer n);

  /// Shared-weight encoding; all clips go through the encoder as one batch.
  std::vector<ag::Var> encode(const std::vector<ag::Var>& clips) const;
  /// r_g from features and raw views (each (B, d)).
  ag::Var global_representation(const std::vector<ag::Var>& features, const std::vector<Tensor>& views) const;
  /// r_t from features, raw input views and raw query view.
  ag::Var view_dependent_representation(const std::vector<ag::Var>& features, const std::vector<Tensor>& views,
                                        const Tensor& query_view) const;
  /// r'_g: query network over r_g and the embedded query view.
  ag::Var query(const ag::Var& global, const Tensor& query_view) const;
  /// Channel concatenation; an undefined branch is replaced by zeros of its width.
  ag::Var fuse(const ag::Var& retrieved, const ag::Var& view_dependent) const;
  ag::Var decode(const ag::Var& dual, int frames_out) const;

  /// Predicted clip (B, T, H, W, 3) in (-1, 1).
  ag::Var forward(const GeneratorInput& input, AblationMode mode) const;
  ag::Var forward(const GeneratorInput& input) const { return forward(input, cfg_.ablation); }

  /// First-layer fully connected weights of the view-dependent block, for inspection.
  const Linear& vd_fc1() const { return vd_fc1_; }
  const Linear& vd_fc2() const { return vd_fc2_; }

 private:
  Tensor normalized(const Tensor& views) const;
  Tensor normalized_partial(const Tensor& views) const;
  void check_input(const GeneratorInput& input) const;

  ModelConfig cfg_;
  SchemaPtr schema_;
  ParameterSet params_;
  ViewNormalizer normalizer_;
  std::unique_ptr<VideoEncoder> encoder_;
  ConvLstmAggregator gr_;
  ConvLstmAggregator vd_;
  Linear vd_fc1_, vd_fc2_;
  Conv3d query_;
  std::vector<Conv3d> decoder_;
};

/// Six strided 3D convolutions, a fully connected layer and a sigmoid.
/// Parameters are prefixed disc.
class Discriminator {
 public:
  explicit Discriminator(const ModelConfig& cfg);

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  /// Realness in (0, 1), shape (B, 1).
  ag::Var operator()(const ag::Var& clip) const;
  /// Pre-sigmoid score.
  ag::Var logits(const ag::Var& clip) const;

 private:
  ModelConfig cfg_;
  ParameterSet params_;
  std::vector<Conv3d> convs_;
  Linear fc_;
};

}  // namespace novelview
