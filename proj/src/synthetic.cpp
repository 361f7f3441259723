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

#include "novelview/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include "novelview/dataset.hpp"
#include "novelview/errors.hpp"
#include "novelview/png_io.hpp"
#include "novelview/random.hpp"
#include "novelview/text_util.hpp"

namespace novelview::synth {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSuperSample = 2;
constexpr double kReferenceWidth = 224.0;  // intrinsics in view vectors are pixels at this width

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 normalized(const Vec3& a) {
  const double n = std::sqrt(dot(a, a));
  return {a[0] / n, a[1] / n, a[2] / n};
}
double radians(double deg) { return deg * kPi / 180.0; }

Color mix(const Color& a, const Color& b, double s) {
  return {a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s, a[2] + (b[2] - a[2]) * s};
}

void distort(const std::array<double, 5>& k, double x, double y, double& xd, double& yd) {
  const double r2 = x * x + y * y;
  const double radial = 1.0 + k[0] * r2 + k[1] * r2 * r2 + k[4] * r2 * r2 * r2;
  xd = x * radial + 2.0 * k[2] * x * y + k[3] * (r2 + 2.0 * x * x);
  yd = y * radial + k[2] * (r2 + 2.0 * y * y) + 2.0 * k[3] * x * y;
}

// Fixed-point inversion of the distortion model (OpenCV's undistortPoints scheme).
void undistort(const std::array<double, 5>& k, double xd, double yd, double& x, double& y) {
  x = xd;
  y = yd;
  for (int it = 0; it < 10; ++it) {
    const double r2 = x * x + y * y;
    const double radial = 1.0 + k[0] * r2 + k[1] * r2 * r2 + k[4] * r2 * r2 * r2;
    const double dx = 2.0 * k[2] * x * y + k[3] * (r2 + 2.0 * x * x);
    const double dy = k[2] * (r2 + 2.0 * y * y) + 2.0 * k[3] * x * y;
    x = (xd - dx) / radial;
    y = (yd - dy) / radial;
  }
}

void orient(Camera& cam, double yaw_deg, double pitch_deg) {
  const double yaw = radians(yaw_deg), pitch = radians(pitch_deg);
  cam.forward = {-std::sin(yaw) * std::cos(pitch), std::sin(pitch), -std::cos(yaw) * std::cos(pitch)};
  cam.right = normalized({-cam.forward[2], 0.0, cam.forward[0]});
  cam.up = cross(cam.right, cam.forward);
}

double hit_sphere(const Vec3& origin, const Vec3& dir, const Vec3& centre, double radius) {
  const Vec3 oc = sub(origin, centre);
  const double b = dot(oc, dir);
  const double c = dot(oc, oc) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return -1.0;
  const double s = std::sqrt(disc);
  const double t0 = -b - s;
  return t0 > 1e-9 ? t0 : (-b + s > 1e-9 ? -b + s : -1.0);
}

double hit_box(const Vec3& origin, const Vec3& dir, const Vec3& centre, double half) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = centre[a] - half, hi = centre[a] + half;
    if (std::fabs(dir[a]) < 1e-15) {
      if (origin[a] < lo || origin[a] > hi) return -1.0;
      continue;
    }
    double t1 = (lo - origin[a]) / dir[a];
    double t2 = (hi - origin[a]) / dir[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
  }
  if (tmax < tmin || tmax <= 1e-9) return -1.0;
  return tmin > 1e-9 ? tmin : tmax;
}

Color trace(const SceneSpec& spec, const std::vector<Vec3>& centres, const Vec3& origin, const Vec3& dir) {
  double best = std::numeric_limits<double>::infinity();
  const Color* colour = nullptr;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const auto& obj = spec.objects[i];
    const double t = obj.kind == ObjectKind::kSphere ? hit_sphere(origin, dir, centres[i], obj.size)
                                                     : hit_box(origin, dir, centres[i], obj.size);
    if (t > 0.0 && t < best) {
      best = t;
      colour = &obj.color;
    }
  }
  if (dir[1] < -1e-12) {
    const double tg = -origin[1] / dir[1];
    if (tg > 1e-9 && tg < best) {
      const double x = origin[0] + tg * dir[0];
      const double s = std::clamp(0.5 + x / (4.0 * spec.arena_half_extent), 0.0, 1.0);
      return mix(spec.background.ground_a, spec.background.ground_b, s);
    }
  }
  if (colour) return *colour;
  const double azimuth = std::atan2(dir[0], -dir[2]);
  const double s = 0.5 + 0.5 * std::sin(spec.background.sky_frequency * azimuth + spec.background.sky_phase);
  return mix(spec.background.sky_a, spec.background.sky_b, s);
}

Color random_colour(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

}  // namespace

std::array<double, 2> Trajectory::at(int frame) const {
  const int loop = std::max(period - 1, 1);
  const int k = ((frame % loop) + loop) % loop;
  const double s = static_cast<double>(k) / static_cast<double>(loop);
  if (kind == MotionKind::kCircular) {
    const double theta = phase + static_cast<double>(direction) * 2.0 * kPi * s;
    return {a[0] + radius * std::cos(theta), a[1] + radius * std::sin(theta)};
  }
  const double w = 1.0 - std::fabs(2.0 * s - 1.0);  // 0 -> 1 -> 0 over one loop
  return {a[0] + (b[0] - a[0]) * w, a[1] + (b[1] - a[1]) * w};
}

Vec3 SceneObject::centre(int frame) const {
  const auto p = motion.at(frame);
  return {p[0], size, p[1]};
}

SceneSpec SceneSpec::from_seed(std::uint64_t seed, double arena_half_extent) {
  static const std::vector<Color> kPalette = {{0.90, 0.15, 0.10}, {0.10, 0.80, 0.20}, {0.15, 0.30, 0.95},
                                              {0.95, 0.85, 0.10}, {0.85, 0.20, 0.80}, {0.10, 0.85, 0.85}};
  Rng rng(seed);
  SceneSpec spec;
  spec.seed = seed;
  spec.arena_half_extent = arena_half_extent;
  const double a = arena_half_extent;
  std::vector<std::size_t> colours{0, 1, 2, 3, 4, 5};
  rng.shuffle(colours);
  const int count = 1 + static_cast<int>(rng.below(3));
  for (int i = 0; i < count; ++i) {
    SceneObject obj;
    obj.kind = rng.below(2) == 0 ? ObjectKind::kSphere : ObjectKind::kCube;
    obj.size = rng.uniform(0.3, 0.5);
    obj.color = kPalette[colours[static_cast<std::size_t>(i)]];
    Trajectory& m = obj.motion;
    m.period = 8 + static_cast<int>(rng.below(17));
    const double margin = obj.size + 0.05;
    if (rng.below(2) == 0) {
      m.kind = MotionKind::kCircular;
      m.radius = rng.uniform(0.4, 1.0);
      const double reach = a - m.radius - margin;
      m.a = {rng.uniform(-reach, reach), rng.uniform(-reach, reach)};
      m.phase = rng.uniform(0.0, 2.0 * kPi);
      m.direction = rng.below(2) == 0 ? 1 : -1;
    } else {
      m.kind = MotionKind::kLinear;
      const double reach = a - margin;
      m.a = {rng.uniform(-reach, reach), rng.uniform(-reach, reach)};
      m.b = {rng.uniform(-reach, reach), rng.uniform(-reach, reach)};
    }
    spec.objects.push_back(obj);
  }
  spec.background.sky_a = random_colour(rng, 0.05, 0.35);
  spec.background.sky_b = random_colour(rng, 0.65, 0.95);
  spec.background.sky_frequency = 1.5;
  spec.background.sky_phase = rng.uniform(0.0, 2.0 * kPi);
  spec.background.ground_a = random_colour(rng, 0.25, 0.45);
  spec.background.ground_b = random_colour(rng, 0.45, 0.65);
  spec.validate();
  return spec;
}

void SceneSpec::validate() const {
  if (objects.empty() || objects.size() > 3) throw ConfigError("scene needs 1-3 objects");
  std::set<Color> colours;
  for (const auto& obj : objects) {
    if (!colours.insert(obj.color).second) throw ConfigError("scene objects must have distinct colours");
    const auto& m = obj.motion;
    if (m.period < 2) throw ConfigError("trajectory period must be at least 2 frames");
    const double limit = arena_half_extent - obj.size;
    auto inside = [&](double x, double z) { return std::fabs(x) <= limit && std::fabs(z) <= limit; };
    bool ok = true;
    if (m.kind == MotionKind::kCircular) {
      ok = std::fabs(m.a[0]) + m.radius <= limit && std::fabs(m.a[1]) + m.radius <= limit;
    } else {
      ok = inside(m.a[0], m.a[1]) && inside(m.b[0], m.b[1]);
    }
    if (!ok) throw ConfigError("object trajectory leaves the arena");
  }
}

CameraRig::CameraRig(std::vector<CameraEntry> cameras) : cameras_(std::move(cameras)) {
  if (cameras_.empty()) throw ConfigError("camera rig is empty");
  std::set<std::string> ids;
  for (const auto& c : cameras_) {
    if (!ids.insert(c.id).second) throw ConfigError("duplicate camera id '" + c.id + "'");
    if (c.view.schema().name() != cameras_.front().view.schema().name()) {
      throw ConfigError("camera rig mixes view schemas");
    }
  }
}

CameraRig CameraRig::ring(const SchemaPtr& schema, int per_panel, int panels, double max_pan_deg, double distance,
                          double height) {
  if (per_panel < 1 || panels < 1) throw ConfigError("camera ring needs at least one camera");
  if (max_pan_deg < 0.0 || max_pan_deg > 45.0) throw ConfigError("ring pans must stay within +/-45 degrees");
  std::vector<CameraEntry> cams;
  int serial = 0;
  for (int p = 0; p < panels; ++p) {
    const double h = height + 0.5 * p;
    const double tilt = -std::atan2(h - 0.4, distance) * 180.0 / kPi;
    for (int i = 0; i < per_panel; ++i, ++serial) {
      const double pan = per_panel == 1 ? 0.0 : -max_pan_deg + 2.0 * max_pan_deg * i / (per_panel - 1);
      const double az = radians(pan);
      std::map<std::string, std::vector<float>> f;
      if (schema->name() == "panoptic14") {
        f["location"] = {static_cast<float>(distance * std::sin(az)), static_cast<float>(h),
                         static_cast<float>(distance * std::cos(az))};
        f["principal_point"] = {static_cast<float>(0.5 * ((i * 7) % 5 - 2)), static_cast<float>(0.5 * ((i * 3) % 5 - 2))};
        f["focal_length"] = {static_cast<float>(246.0 + 2.0 * (i % 3)), static_cast<float>(246.0 + 2.0 * (i % 3))};
        f["distortion"] = {static_cast<float>(-0.05 + 0.005 * (i % 5)), 0.0f, 0.0f, 0.0f, 0.0f};
        f["horizontal_pan"] = {static_cast<float>(pan)};
        f["vertical_pan"] = {static_cast<float>(tilt)};
      } else if (schema->name() == "ntu5") {
        f["camera_height"] = {static_cast<float>(h)};
        f["camera_distance"] = {static_cast<float>(distance)};
        f["horizontal_pan"] = {0.0f};
        f["vertical_pan"] = {static_cast<float>(tilt)};
        f["viewpoint_angle"] = {static_cast<float>(pan)};
      } else {
        throw ConfigError("no camera model for schema '" + schema->name() + "'");
      }
      cams.push_back({"v" + std::to_string(serial + 1), p, make_view_vector(schema, f)});
    }
  }
  return CameraRig(std::move(cams));
}

Camera Camera::from_view(const ViewVector& view, int resolution) {
  Camera cam;
  const double res = resolution;
  const std::string& schema = view.schema().name();
  if (schema == "panoptic14") {
    const auto loc = view.field("location");
    const auto pp = view.field("principal_point");
    const auto focal = view.field("focal_length");
    const auto dist = view.field("distortion");
    const double s = res / kReferenceWidth;
    cam.position = {loc[0], loc[1], loc[2]};
    cam.fx = focal[0] * s;
    cam.fy = focal[1] * s;
    cam.cx = 0.5 * res + pp[0] * s;
    cam.cy = 0.5 * res + pp[1] * s;
    for (int i = 0; i < 5; ++i) cam.distortion[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(i)];
    orient(cam, view.field("horizontal_pan")[0], view.field("vertical_pan")[0]);
  } else if (schema == "ntu5") {
    const double h = view.field("camera_height")[0];
    const double d = view.field("camera_distance")[0];
    const double angle = view.field("viewpoint_angle")[0];
    const double az = radians(angle);
    cam.position = {d * std::sin(az), h, d * std::cos(az)};
    cam.fx = cam.fy = 1.1 * res;
    cam.cx = cam.cy = 0.5 * res;
    orient(cam, angle + view.field("horizontal_pan")[0], view.field("vertical_pan")[0]);
  } else {
    throw ConfigError("no camera model for schema '" + schema + "'");
  }
  return cam;
}

std::optional<std::array<double, 2>> Camera::project(const Vec3& point) const {
  const Vec3 p = sub(point, position);
  const double depth = dot(p, forward);
  if (depth <= 1e-9) return std::nullopt;
  const double x = dot(p, right) / depth;
  const double y = -dot(p, up) / depth;
  double xd = 0, yd = 0;
  distort(distortion, x, y, xd, yd);
  return std::array<double, 2>{cx + fx * xd, cy + fy * yd};
}

Vec3 Camera::ray(double px, double py) const {
  double x = 0, y = 0;
  undistort(distortion, (px - cx) / fx, (py - cy) / fy, x, y);
  return normalized({forward[0] + x * right[0] - y * up[0], forward[1] + x * right[1] - y * up[1],
                     forward[2] + x * right[2] - y * up[2]});
}

bool supported_resolution(int resolution) { return resolution == 56 || resolution == 112 || resolution == 224; }

Tensor render_clip(const SceneSpec& spec, const ViewVector& view, int frames, int resolution) {
  if (frames < 1) throw ConfigError("render_clip needs at least one frame");
  if (!supported_resolution(resolution)) {
    throw ConfigError("unsupported resolution " + std::to_string(resolution) + " (expected 56, 112 or 224)");
  }
  const Camera cam = Camera::from_view(view, resolution);
  const int res = resolution;
  Tensor clip({frames, res, res, 3});
  std::vector<Vec3> centres(spec.objects.size());
  std::vector<Vec3> rays(static_cast<std::size_t>(res) * res * kSuperSample * kSuperSample);
  std::size_t r = 0;
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x)
      for (int sy = 0; sy < kSuperSample; ++sy)
        for (int sx = 0; sx < kSuperSample; ++sx)
          rays[r++] = cam.ray(x + (sx + 0.5) / kSuperSample, y + (sy + 0.5) / kSuperSample);

  constexpr double kSamples = kSuperSample * kSuperSample;
  float* out = clip.data();
  for (int t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < spec.objects.size(); ++i) centres[i] = spec.objects[i].centre(t);
    r = 0;
    for (int p = 0; p < res * res; ++p) {
      Color acc{0, 0, 0};
      for (int s = 0; s < kSuperSample * kSuperSample; ++s) {
        const Color c = trace(spec, centres, cam.position, rays[r++]);
        for (int k = 0; k < 3; ++k) acc[static_cast<std::size_t>(k)] += c[static_cast<std::size_t>(k)];
      }
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(acc[static_cast<std::size_t>(k)] / kSamples, 0.0, 1.0);
        const double q = std::nearbyint(v * 255.0);
        *out++ = static_cast<float>(q / 127.5 - 1.0);
      }
    }
  }
  return clip;
}

void generate_dataset(const CameraRig& rig, int num_scenes, int frames, int resolution,
                      const std::filesystem::path& out_dir, std::uint64_t base_seed) {
  if (num_scenes < 1) throw ConfigError("generate_dataset needs at least one scene");
  if (!supported_resolution(resolution)) {
    throw ConfigError("unsupported resolution " + std::to_string(resolution) + " (expected 56, 112 or 224)");
  }
  Manifest manifest;
  manifest.schema = rig.schema()->name();
  manifest.frames = frames;
  manifest.resolution = resolution;
  for (std::size_t j = 0; j < rig.size(); ++j) {
    manifest.cameras.push_back({static_cast<int>(j), rig.cameras()[j].id, rig.cameras()[j].group});
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  for (int i = 0; i < num_scenes; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    manifest.scenes.push_back({i, seed});
    const SceneSpec spec = SceneSpec::from_seed(seed);
    for (std::size_t j = 0; j < rig.size(); ++j) {
      const auto dir = out_dir / Manifest::clip_dir(i, static_cast<int>(j));
      std::filesystem::create_directories(dir / "frames", ec);
      if (ec) throw IoError("cannot create '" + (dir / "frames").string() + "': " + ec.message());
      write_view_metadata(dir / "view.txt", rig.cameras()[j].view);
      write_clip_frames(dir / "frames", render_clip(spec, rig.cameras()[j].view, frames, resolution));
    }
  }
  write_text_file(out_dir / "manifest.txt", manifest.format());
}

}  // namespace novelview::synth
