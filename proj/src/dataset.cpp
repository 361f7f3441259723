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

#include "novelview/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "novelview/errors.hpp"
#include "novelview/png_io.hpp"
#include "novelview/text_util.hpp"

namespace novelview {
namespace {

constexpr const char* kManifestFormat = "novelview-dataset 1";

std::filesystem::path frame_path(const std::filesystem::path& dir, int frame) {
  char name[32];
  std::snprintf(name, sizeof(name), "%04d.png", frame);
  return dir / name;
}

int parse_int_field(const std::string& text, const std::string& what, const std::string& source) {
  const auto v = try_parse_int(text);
  if (!v || *v < 0 || *v > (1 << 30)) throw IoError(source + ": bad " + what + " '" + text + "'");
  return static_cast<int>(*v);
}

}  // namespace

void ClipSet::validate() const {
  if (clips.empty()) throw ShapeError("clip set is empty");
  for (const auto& c : clips) {
    if (!c.pixels || c.pixels->rank() != 4 || c.pixels->dim(3) != 3) throw ShapeError("clip must be (T, H, W, 3)");
    if (c.pixels->shape() != clips.front().pixels->shape()) {
      throw ShapeError("clip set members differ in shape: " + to_string(c.pixels->shape()) + " vs " +
                       to_string(clips.front().pixels->shape()));
    }
  }
}

std::string Manifest::format() const {
  std::ostringstream os;
  os << "format = " << kManifestFormat << "\n";
  os << "schema = " << schema << "\n";
  os << "frames = " << frames << "\n";
  os << "resolution = " << resolution << "\n";
  os << "# camera = index id group\n";
  for (const auto& c : cameras) os << "camera = " << c.index << " " << c.id << " " << c.group << "\n";
  os << "# scene = index seed\n";
  for (const auto& s : scenes) os << "scene = " << s.index << " " << s.seed << "\n";
  return os.str();
}

Manifest Manifest::parse(const std::string& text, const std::string& source) {
  Manifest m;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    std::optional<std::pair<std::string, std::string>> kv;
    try {
      kv = split_key_value(line);
    } catch (const ConfigError&) {
      throw IoError(where + ": corrupt manifest line");
    }
    if (!kv) continue;
    const auto& [key, value] = *kv;
    if (key != "camera" && key != "scene" && !seen.insert(key).second) throw IoError(where + ": duplicate '" + key + "'");
    if (key == "format") {
      if (value != kManifestFormat) throw IoError(where + ": unsupported manifest format '" + value + "'");
    } else if (key == "schema") {
      m.schema = value;
    } else if (key == "frames") {
      m.frames = parse_int_field(value, "frame count", where);
    } else if (key == "resolution") {
      m.resolution = parse_int_field(value, "resolution", where);
    } else if (key == "camera") {
      const auto parts = split_ws(value);
      if (parts.size() != 3) throw IoError(where + ": camera rows need 'index id group'");
      m.cameras.push_back({parse_int_field(parts[0], "camera index", where), parts[1],
                           parse_int_field(parts[2], "camera group", where)});
    } else if (key == "scene") {
      const auto parts = split_ws(value);
      if (parts.size() != 2) throw IoError(where + ": scene rows need 'index seed'");
      const auto seed = try_parse_int(parts[1]);
      if (!seed || *seed < 0) throw IoError(where + ": bad scene seed '" + parts[1] + "'");
      m.scenes.push_back({parse_int_field(parts[0], "scene index", where), static_cast<std::uint64_t>(*seed)});
    } else {
      throw IoError(where + ": unknown manifest key '" + key + "'");
    }
  }
  if (!seen.count("format")) throw IoError(source + ": corrupt manifest (no format line)");
  if (m.schema.empty() || m.frames < 1 || m.resolution < 1) {
    throw IoError(source + ": manifest needs schema, frames and resolution");
  }
  if (m.cameras.empty() || m.scenes.empty()) throw IoError(source + ": manifest lists no cameras or no scenes");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < m.cameras.size(); ++i) {
    if (m.cameras[i].index != static_cast<int>(i)) throw IoError(source + ": camera rows must be numbered 0, 1, ...");
    if (!ids.insert(m.cameras[i].id).second) throw IoError(source + ": duplicate camera id '" + m.cameras[i].id + "'");
  }
  for (std::size_t i = 0; i < m.scenes.size(); ++i) {
    if (m.scenes[i].index != static_cast<int>(i)) throw IoError(source + ": scene rows must be numbered 0, 1, ...");
  }
  return m;
}

std::filesystem::path Manifest::clip_dir(int scene, int camera) {
  return std::filesystem::path("scene_" + std::to_string(scene)) / ("cam_" + std::to_string(camera));
}

void write_clip_frames(const std::filesystem::path& dir, const Tensor& clip) {
  if (clip.rank() != 4 || clip.dim(3) != 3) throw ShapeError("clip must be (T, H, W, 3), got " + to_string(clip.shape()));
  const auto t = clip.dim(0), h = clip.dim(1), w = clip.dim(2);
  const std::int64_t frame_size = h * w * 3;
  for (std::int64_t f = 0; f < t; ++f) {
    Image8 img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.rgb.resize(static_cast<std::size_t>(frame_size));
    const float* src = clip.data() + f * frame_size;
    for (std::int64_t i = 0; i < frame_size; ++i) {
      const double q = std::nearbyint((static_cast<double>(src[i]) + 1.0) * 127.5);
      img.rgb[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
    }
    write_png(frame_path(dir, static_cast<int>(f)), img);
  }
}

Tensor read_clip_frames(const std::filesystem::path& dir, int offset, int count) {
  if (offset < 0 || count < 1) throw ProtocolError("bad frame window");
  Tensor out;
  for (int f = 0; f < count; ++f) {
    const auto path = frame_path(dir, offset + f);
    const Image8 img = read_png(path);
    if (f == 0) out = Tensor({count, img.height, img.width, 3});
    if (img.height != out.dim(1) || img.width != out.dim(2)) throw IoError(path.string() + ": frame size changes within clip");
    float* dst = out.data() + static_cast<std::int64_t>(f) * img.height * img.width * 3;
    for (std::size_t i = 0; i < img.rgb.size(); ++i) dst[i] = static_cast<float>(img.rgb[i] / 127.5 - 1.0);
  }
  return out;
}

DatasetIndex::DatasetIndex(std::filesystem::path root, Manifest manifest, std::vector<ViewVector> views)
    : root_(std::move(root)), manifest_(std::move(manifest)), views_(std::move(views)) {
  if (views_.size() != manifest_.cameras.size() || views_.empty()) {
    throw IoError("dataset index needs one view per manifest camera");
  }
}

int DatasetIndex::camera_index(const std::string& id) const {
  for (const auto& c : manifest_.cameras)
    if (c.id == id) return c.index;
  throw ProtocolError("unknown view id '" + id + "'");
}

std::vector<std::vector<int>> DatasetIndex::groups() const {
  std::map<int, std::vector<int>> by_group;
  for (const auto& c : manifest_.cameras) by_group[c.group].push_back(c.index);
  std::vector<std::vector<int>> out;
  for (auto& [g, cams] : by_group) out.push_back(std::move(cams));
  return out;
}

VideoClip DatasetIndex::load_clip(int scene, int camera, int offset, int frames) const {
  if (scene < 0 || scene >= num_scenes() || camera < 0 || camera >= num_cameras()) {
    throw ProtocolError("clip (" + std::to_string(scene) + ", " + std::to_string(camera) + ") is not in the dataset");
  }
  if (offset < 0 || frames < 1 || offset + frames > manifest_.frames) {
    throw ProtocolError("frame window [" + std::to_string(offset) + ", " + std::to_string(offset + frames) +
                        ") exceeds scene length " + std::to_string(manifest_.frames));
  }
  VideoClip clip;
  clip.pixels = std::make_shared<const Tensor>(read_clip_frames(clip_path(scene, camera) / "frames", offset, frames));
  clip.view = view(camera);
  clip.clip_id = "scene_" + std::to_string(scene) + "/" + camera_id(camera);
  return clip;
}

DatasetIndex load_dataset(const std::filesystem::path& root) {
  const auto manifest_path = root / "manifest.txt";
  if (!std::filesystem::is_regular_file(manifest_path)) {
    throw IoError("no manifest at '" + manifest_path.string() + "'");
  }
  Manifest manifest = Manifest::parse(read_text_file(manifest_path), manifest_path.string());
  SchemaPtr schema;
  try {
    schema = ViewSchema::builtin(manifest.schema);
  } catch (const Error& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  std::vector<ViewVector> views;
  for (std::size_t j = 0; j < manifest.cameras.size(); ++j) {
    // View metadata is per camera; every scene must agree with scene 0.
    const auto first = root / Manifest::clip_dir(0, static_cast<int>(j)) / "view.txt";
    views.push_back(read_view_metadata(first, schema));
  }
  for (int i = 0; i < static_cast<int>(manifest.scenes.size()); ++i) {
    for (int j = 0; j < static_cast<int>(manifest.cameras.size()); ++j) {
      const auto dir = root / Manifest::clip_dir(i, j);
      if (i > 0) {
        const auto vpath = dir / "view.txt";
        if (!(read_view_metadata(vpath, schema) == views[static_cast<std::size_t>(j)])) {
          throw IoError(vpath.string() + ": view differs from scene 0 for the same camera");
        }
      }
      for (int f = 0; f < manifest.frames; ++f) {
        const auto path = frame_path(dir / "frames", f);
        if (!std::filesystem::is_regular_file(path)) throw IoError("missing frame '" + path.string() + "'");
        const ImageSize size = read_png_size(path);
        if (size.width != manifest.resolution || size.height != manifest.resolution) {
          throw IoError(path.string() + ": frame is " + std::to_string(size.width) + "x" + std::to_string(size.height) +
                        " but the manifest declares resolution " + std::to_string(manifest.resolution));
        }
      }
      if (std::filesystem::is_regular_file(frame_path(dir / "frames", manifest.frames))) {
        throw IoError(dir.string() + ": more frames than the manifest declares");
      }
    }
  }
  return DatasetIndex(root, std::move(manifest), std::move(views));
}

TrainingExample sample_training_example(const DatasetIndex& index, Rng& rng, const SamplingProtocol& protocol) {
  const int n = protocol.num_inputs;
  if (n < 1) throw ProtocolError("need at least one input view");
  if (protocol.clip_frames < 1 || protocol.clip_frames > index.frames()) {
    throw ProtocolError("clip length " + std::to_string(protocol.clip_frames) + " does not fit scenes of " +
                        std::to_string(index.frames()) + " frames");
  }
  std::vector<std::vector<int>> groups;
  if (protocol.grouping == Grouping::kPanel) {
    groups = index.groups();
  } else {
    groups.emplace_back();
    for (int j = 0; j < index.num_cameras(); ++j) groups.back().push_back(j);
  }
  for (const auto& g : groups) {
    if (static_cast<int>(g.size()) < n + 1) {
      throw ProtocolError("a camera group has " + std::to_string(g.size()) + " cameras but " + std::to_string(n + 1) +
                          " are needed");
    }
  }
  const int scene = static_cast<int>(rng.below(static_cast<std::uint64_t>(index.num_scenes())));
  std::vector<int> cams = groups[rng.below(groups.size())];
  for (int k = 0; k <= n; ++k) {  // partial Fisher-Yates
    const auto pick = static_cast<std::size_t>(k) + rng.below(cams.size() - static_cast<std::size_t>(k));
    std::swap(cams[static_cast<std::size_t>(k)], cams[pick]);
  }
  const int offset = static_cast<int>(rng.below(static_cast<std::uint64_t>(index.frames() - protocol.clip_frames + 1)));

  TrainingExample ex;
  ex.scene = scene;
  for (int k = 0; k < n; ++k) {
    const int cam = cams[static_cast<std::size_t>(k)];
    ex.inputs.clips.push_back(index.load_clip(scene, cam, offset, protocol.clip_frames));
    ex.input_ids.push_back(index.camera_id(cam));
  }
  const int q = cams[static_cast<std::size_t>(n)];
  ex.target = index.load_clip(scene, q, offset, protocol.clip_frames);
  ex.query_view = ex.target.view;
  ex.query_id = index.camera_id(q);
  return ex;
}

std::vector<TrainingExample> fixed_eval_pairs(const DatasetIndex& index, const std::vector<std::string>& input_views,
                                              const std::vector<std::string>& query_views, int clip_frames,
                                              int offset) {
  if (input_views.empty()) throw ProtocolError("need at least one input view");
  std::vector<int> inputs, queries;
  for (const auto& id : input_views) inputs.push_back(index.camera_index(id));
  for (const auto& id : query_views) {
    const int q = index.camera_index(id);
    if (std::find(inputs.begin(), inputs.end(), q) != inputs.end()) {
      throw ProtocolError("query view '" + id + "' is also an input view");
    }
    queries.push_back(q);
  }
  std::vector<TrainingExample> out;
  if (queries.empty()) return out;
  for (int s = 0; s < index.num_scenes(); ++s) {
    ClipSet set;
    for (int cam : inputs) set.clips.push_back(index.load_clip(s, cam, offset, clip_frames));
    for (int q : queries) {
      TrainingExample ex;
      ex.scene = s;
      ex.inputs = set;
      ex.input_ids = input_views;
      ex.target = index.load_clip(s, q, offset, clip_frames);
      ex.query_view = ex.target.view;
      ex.query_id = index.camera_id(q);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

ClipSet replicate_single_view(const VideoClip& clip, int n) {
  if (n < 1) throw ProtocolError("replication count must be at least 1");
  ClipSet set;
  set.clips.assign(static_cast<std::size_t>(n), clip);
  return set;
}

}  // namespace novelview
