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
#include <vector>

#include "novelview/random.hpp"
#include "novelview/tensor.hpp"
#include "novelview/view_geometry.hpp"

namespace novelview {

/// Frames (T, H, W, 3) in [-1, 1] plus the camera they were seen from.
/// Pixels are shared, so copies of a clip are cheap.
struct VideoClip {
  std::shared_ptr<const Tensor> pixels;
  ViewVector view;
  std::string clip_id;

  const Tensor& frames() const { return *pixels; }
};

/// N temporally aligned clips of one scene with a common shape.
struct ClipSet {
  std::vector<VideoClip> clips;

  std::size_t size() const { return clips.size(); }
  const VideoClip& operator[](std::size_t i) const { return clips[i]; }
  /// Throws ShapeError when empty or when members differ in shape.
  void validate() const;
};

struct TrainingExample {
  ClipSet inputs;
  ViewVector query_view;
  VideoClip target;
  int scene = 0;
  std::vector<std::string> input_ids;
  std::string query_id;
};

struct ManifestCamera {
  int index = 0;
  std::string id;
  int group = 0;
};

struct ManifestScene {
  int index = 0;
  std::uint64_t seed = 0;
};

/// Contents of root/manifest.txt.
struct Manifest {
  std::string schema;
  int frames = 0;
  int resolution = 0;
  std::vector<ManifestCamera> cameras;
  std::vector<ManifestScene> scenes;

  std::string format() const;
  /// `source` names the file in error messages.
  static Manifest parse(const std::string& text, const std::string& source);
  static std::filesystem::path clip_dir(int scene, int camera);
};

/// 8-bit PNGs 0000.png, 0001.png, ... from a (T, H, W, 3) clip in [-1, 1].
void write_clip_frames(const std::filesystem::path& dir, const Tensor& clip);
/// Frames [offset, offset + count) of a frames directory, decoded with x / 127.5 - 1.
Tensor read_clip_frames(const std::filesystem::path& dir, int offset, int count);

/// Validated, immutable view of a dataset directory. Frames are decoded on demand.
class DatasetIndex {
 public:
  DatasetIndex(std::filesystem::path root, Manifest manifest, std::vector<ViewVector> views);

  const std::filesystem::path& root() const { return root_; }
  const Manifest& manifest() const { return manifest_; }
  const SchemaPtr& schema() const { return views_.front().schema_ptr(); }
  int num_scenes() const { return static_cast<int>(manifest_.scenes.size()); }
  int num_cameras() const { return static_cast<int>(manifest_.cameras.size()); }
  int frames() const { return manifest_.frames; }
  int resolution() const { return manifest_.resolution; }
  /// Number of (scene, camera) clips.
  std::size_t size() const { return manifest_.scenes.size() * manifest_.cameras.size(); }

  const ViewVector& view(int camera) const { return views_.at(static_cast<std::size_t>(camera)); }
  const std::vector<ViewVector>& views() const { return views_; }
  const std::string& camera_id(int camera) const { return manifest_.cameras.at(static_cast<std::size_t>(camera)).id; }
  /// Throws ProtocolError for unknown ids.
  int camera_index(const std::string& id) const;
  /// Camera indices grouped by panel, groups in ascending order.
  std::vector<std::vector<int>> groups() const;
  std::filesystem::path clip_path(int scene, int camera) const { return root_ / Manifest::clip_dir(scene, camera); }

  VideoClip load_clip(int scene, int camera, int offset, int frames) const;

 private:
  std::filesystem::path root_;
  Manifest manifest_;
  std::vector<ViewVector> views_;
};

/// Reads and validates root/manifest.txt, every view.txt and every frame header.
DatasetIndex load_dataset(const std::filesystem::path& root);

enum class Grouping { kPanel, kAll };

struct SamplingProtocol {
  int num_inputs = 5;
  Grouping grouping = Grouping::kPanel;
  int clip_frames = 16;
};

/// Draws (in this order) a scene, a group, N+1 distinct cameras of the group and
/// a temporal offset shared by all views. The first N cameras are the inputs.
TrainingExample sample_training_example(const DatasetIndex& index, Rng& rng, const SamplingProtocol& protocol);

/// Every scene paired with every query view, inputs fixed, temporal offset fixed.
std::vector<TrainingExample> fixed_eval_pairs(const DatasetIndex& index, const std::vector<std::string>& input_views,
                                              const std::vector<std::string>& query_views, int clip_frames,
                                              int offset = 0);

/// N copies of one clip sharing its pixels.
ClipSet replicate_single_view(const VideoClip& clip, int n);

}  // namespace novelview
