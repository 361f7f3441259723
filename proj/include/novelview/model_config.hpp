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
#include <string>
#include <vector>

#include "novelview/ops.hpp"
#include "novelview/view_geometry.hpp"

namespace novelview {

enum class EncoderKind { kTiny, kI3dModified };
enum class AblationMode { kFull, kVdOnly, kGrOnly };

std::string to_string(EncoderKind kind);
std::string to_string(AblationMode mode);
EncoderKind parse_encoder_kind(const std::string& text);
AblationMode parse_ablation_mode(const std::string& text);

/// Architecture hyperparameters. `ablation` selects which branches the model
/// is built with; a full model can still be run in either reduced mode.
struct ModelConfig {
  EncoderKind encoder = EncoderKind::kTiny;
  int clip_res = 56;
  int clip_frames = 16;
  std::string schema = "panoptic14";
  std::vector<std::int64_t> partial_mask;  // empty: schema default
  int n_train = 5;

  std::int64_t encoder_channels = 256;
  std::vector<std::int64_t> tiny_encoder_filters{64, 128, 256};
  std::vector<std::int64_t> gr_filters{128, 256};  // bidirectional, unidirectional
  std::vector<std::int64_t> vd_filters{64, 128};
  int lstm_kernel = 3;
  std::int64_t query_filters = 256;
  int query_kernel = 5;
  std::vector<std::int64_t> decoder_filters{256, 256, 256, 256, 256, 128, 64, 3};
  std::vector<std::int64_t> decoder_kernels{5, 5, 5, 5, 5, 5, 3, 5};
  std::vector<std::int64_t> discriminator_filters{16, 32, 64, 128, 256, 256};
  int discriminator_kernel = 3;

  AblationMode ablation = AblationMode::kFull;
  std::uint64_t seed = 1;
  std::string i3d_weights;  // optional external weights for the i3d encoder

  /// Full filter counts.
  static ModelConfig full_width();
  /// Narrow widths for CPU-scale runs; same topology as full_width().
  static ModelConfig desk();

  /// Throws ConfigError on any inconsistent or non-positive setting.
  void validate() const;

  SchemaPtr view_schema() const;
  /// Encoder downsampling (T, H, W).
  ag::Triple encoder_factors() const;
  /// Decoder upsampling stages, applied before decoder layers 5, 6 and 7.
  std::vector<ag::Triple> upsampling_schedule() const;
  /// Encoder grid for a clip length; throws ShapeError if the factors do not divide.
  ag::Triple grid(int frames) const;
  std::int64_t retrieved_channels() const { return query_filters; }
  std::int64_t view_dependent_channels() const { return vd_filters[1]; }
  std::int64_t dual_channels() const { return query_filters + vd_filters[1]; }

  /// Sets one field from its text form; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// `key = value` lines accepted by parse().
  std::string format() const;
  static ModelConfig parse(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace novelview
