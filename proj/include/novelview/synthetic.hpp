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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "novelview/tensor.hpp"
#include "novelview/view_geometry.hpp"

namespace novelview::synth {

using Vec3 = std::array<double, 3>;
using Color = std::array<double, 3>;

enum class ObjectKind { kSphere, kCube };
enum class MotionKind { kLinear, kCircular };

/// Closed-loop ground-plane motion. `period` counts frames from one pose to
/// the same pose again, so frame 0 and frame period-1 coincide.
struct Trajectory {
  MotionKind kind = MotionKind::kLinear;
  std::array<double, 2> a{};  // linear: start (x, z); circular: centre (x, z)
  std::array<double, 2> b{};  // linear: turning point (x, z)
  double radius = 0.0;        // circular only
  double phase = 0.0;         // circular only, radians
  int direction = 1;          // circular only, +1 or -1
  int period = 16;

  /// Ground-plane (x, z) position at a frame.
  std::array<double, 2> at(int frame) const;
};

struct SceneObject {
  ObjectKind kind = ObjectKind::kSphere;
  double size = 0.4;  // sphere radius or cube half-extent, metres
  Color color{};
  Trajectory motion;

  /// Centre of the solid in world coordinates (objects rest on the ground).
  Vec3 centre(int frame) const;
};

/// Sky colour varies with world azimuth, ground colour with world x.
struct Background {
  Color sky_a{}, sky_b{};
  double sky_frequency = 1.5;
  double sky_phase = 0.0;
  Color ground_a{}, ground_b{};
};

struct SceneSpec {
  std::uint64_t seed = 0;
  double arena_half_extent = 2.0;
  std::vector<SceneObject> objects;
  Background background;

  /// Deterministic random scene: 1-3 flat-coloured solids with distinct colours.
  static SceneSpec from_seed(std::uint64_t seed, double arena_half_extent = 2.0);
  /// Throws ConfigError if an object can leave the arena or colours repeat.
  void validate() const;
};

struct CameraEntry {
  std::string id;
  int group = 0;
  ViewVector view;
};

/// Cameras of a multi-view capture; `group` is the physical panel.
class CameraRig {
 public:
  explicit CameraRig(std::vector<CameraEntry> cameras);

  /// `per_panel` cameras per panel spread over pans in [-max_pan, max_pan]
  /// degrees around the arena centre. Ids are v1, v2, ... in rig order.
  static CameraRig ring(const SchemaPtr& schema, int per_panel, int panels = 1, double max_pan_deg = 45.0,
                        double distance = 6.0, double height = 1.6);

  const std::vector<CameraEntry>& cameras() const { return cameras_; }
  std::size_t size() const { return cameras_.size(); }
  const SchemaPtr& schema() const { return cameras_.front().view.schema_ptr(); }

 private:
  std::vector<CameraEntry> cameras_;
};

/// Pinhole camera with OpenCV-style (k1, k2, p1, p2, k3) lens distortion,
/// intrinsics in pixels at the rendered resolution.
struct Camera {
  Vec3 position{};
  Vec3 forward{}, right{}, up{};
  double fx = 0, fy = 0, cx = 0, cy = 0;
  std::array<double, 5> distortion{};

  static Camera from_view(const ViewVector& view, int resolution);
  /// Pixel coordinates (x right, y down; pixel centres at +0.5) of a world
  /// point, or nullopt when it is behind the camera.
  std::optional<std::array<double, 2>> project(const Vec3& point) const;
  /// World-space unit ray through a (sub)pixel position.
  Vec3 ray(double px, double py) const;
};

/// Resolutions the renderer supports.
bool supported_resolution(int resolution);

/// Renders `frames` frames of a scene from one view. Pixels are quantised to
/// 8 bits and mapped to [-1, 1]; result shape (T, res, res, 3).
Tensor render_clip(const SceneSpec& spec, const ViewVector& view, int frames, int resolution);

/// Writes root/scene_<i>/cam_<j>/{view.txt, frames/%04d.png} for every scene
/// and camera, then root/manifest.txt. Scene i uses seed base_seed + i.
void generate_dataset(const CameraRig& rig, int num_scenes, int frames, int resolution,
                      const std::filesystem::path& out_dir, std::uint64_t base_seed = 1);

}  // namespace novelview::synth
