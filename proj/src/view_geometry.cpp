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

#include "novelview/view_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "novelview/errors.hpp"
#include "novelview/text_util.hpp"

namespace novelview {

ViewSchema::ViewSchema(std::string name, std::vector<ViewField> fields, std::vector<std::int64_t> partial_mask)
    : name_(std::move(name)), fields_(std::move(fields)), partial_mask_(std::move(partial_mask)) {
  std::set<std::string> seen;
  for (const auto& f : fields_) {
    if (f.size < 1) throw SchemaError("schema '" + name_ + "': field '" + f.name + "' has non-positive size");
    if (!seen.insert(f.name).second) throw SchemaError("schema '" + name_ + "': duplicate field '" + f.name + "'");
    dim_ += f.size;
  }
  if (dim_ < 1) throw SchemaError("schema '" + name_ + "' has no components");
  for (std::size_t i = 0; i < partial_mask_.size(); ++i) {
    const auto idx = partial_mask_[i];
    if (idx < 0 || idx >= dim_) throw SchemaError("schema '" + name_ + "': partial mask index out of range");
    if (i > 0 && partial_mask_[i - 1] >= idx) {
      throw SchemaError("schema '" + name_ + "': partial mask must be sorted and unique");
    }
  }
  if (partial_mask_.empty()) throw SchemaError("schema '" + name_ + "': empty partial mask");
}

SchemaPtr ViewSchema::panoptic14() {
  static const SchemaPtr schema = std::make_shared<ViewSchema>(
      "panoptic14",
      std::vector<ViewField>{{"location", 3},
                             {"principal_point", 2},
                             {"focal_length", 2},
                             {"distortion", 5},
                             {"horizontal_pan", 1},
                             {"vertical_pan", 1}},
      std::vector<std::int64_t>{0, 1, 2, 12, 13});
  return schema;
}

SchemaPtr ViewSchema::ntu5() {
  static const SchemaPtr schema = std::make_shared<ViewSchema>(
      "ntu5",
      std::vector<ViewField>{{"camera_height", 1},
                             {"camera_distance", 1},
                             {"horizontal_pan", 1},
                             {"vertical_pan", 1},
                             {"viewpoint_angle", 1}},
      std::vector<std::int64_t>{2, 3, 4});
  return schema;
}

SchemaPtr ViewSchema::builtin(const std::string& name) {
  if (name == "panoptic14") return panoptic14();
  if (name == "ntu5") return ntu5();
  throw ConfigError("unknown view schema '" + name + "' (expected panoptic14 or ntu5)");
}

SchemaPtr ViewSchema::with_partial_mask(std::vector<std::int64_t> mask) const {
  return std::make_shared<ViewSchema>(name_, fields_, std::move(mask));
}

std::int64_t ViewSchema::offset_of(const std::string& field_name) const {
  std::int64_t off = 0;
  for (const auto& f : fields_) {
    if (f.name == field_name) return off;
    off += f.size;
  }
  throw SchemaError("schema '" + name_ + "' has no field '" + field_name + "'");
}

const ViewField& ViewSchema::field(const std::string& field_name) const {
  for (const auto& f : fields_) {
    if (f.name == field_name) return f;
  }
  throw SchemaError("schema '" + name_ + "' has no field '" + field_name + "'");
}

ViewVector::ViewVector(SchemaPtr schema, std::vector<float> values)
    : schema_(std::move(schema)), values_(std::move(values)) {
  if (!schema_) throw SchemaError("view vector without schema");
  if (static_cast<std::int64_t>(values_.size()) != schema_->dim()) {
    throw SchemaError("view vector has " + std::to_string(values_.size()) + " components, schema '" +
                      schema_->name() + "' needs " + std::to_string(schema_->dim()));
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw SchemaError("view vector has a non-finite component");
  }
}

std::span<const float> ViewVector::field(const std::string& name) const {
  const auto off = schema_->offset_of(name);
  return std::span<const float>(values_).subspan(static_cast<std::size_t>(off),
                                                  static_cast<std::size_t>(schema_->field(name).size));
}

bool operator==(const ViewVector& a, const ViewVector& b) {
  return a.schema_ && b.schema_ && a.schema_->name() == b.schema_->name() && a.values_ == b.values_;
}

PartialViewVector::PartialViewVector(SchemaPtr schema, std::vector<float> values)
    : schema_(std::move(schema)), values_(std::move(values)) {
  if (static_cast<std::int64_t>(values_.size()) != schema_->partial_dim()) {
    throw SchemaError("partial view vector length does not match schema mask");
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw SchemaError("partial view vector has a non-finite component");
  }
}

ViewVector make_view_vector(const SchemaPtr& schema, const std::map<std::string, std::vector<float>>& fields) {
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(schema->dim()));
  for (const auto& f : schema->fields()) {
    auto it = fields.find(f.name);
    if (it == fields.end()) throw SchemaError("schema '" + schema->name() + "': missing field '" + f.name + "'");
    if (static_cast<std::int64_t>(it->second.size()) != f.size) {
      throw SchemaError("schema '" + schema->name() + "': field '" + f.name + "' needs " + std::to_string(f.size) +
                        " components, got " + std::to_string(it->second.size()));
    }
    for (float v : it->second) {
      if (!std::isfinite(v)) throw SchemaError("field '" + f.name + "' has a non-finite component");
    }
    values.insert(values.end(), it->second.begin(), it->second.end());
  }
  for (const auto& [name, _] : fields) {
    bool known = false;
    for (const auto& f : schema->fields()) known = known || f.name == name;
    if (!known) throw SchemaError("schema '" + schema->name() + "' has no field '" + name + "'");
  }
  return ViewVector(schema, std::move(values));
}

PartialViewVector partial_view(const ViewVector& v) {
  std::vector<float> out;
  for (auto idx : v.schema().partial_mask()) out.push_back(v[idx]);
  return PartialViewVector(v.schema_ptr(), std::move(out));
}

Tensor embed_view(std::span<const float> v, std::int64_t t, std::int64_t h, std::int64_t w) {
  if (v.empty()) throw ShapeError("embed_view of an empty vector");
  if (t < 1 || h < 1 || w < 1) throw ShapeError("embed_view grid dims must be positive");
  const auto k = static_cast<std::int64_t>(v.size());
  Tensor out({t, h, w, k});
  float* dst = out.data();
  for (std::int64_t i = 0; i < t * h * w; ++i, dst += k) std::copy(v.begin(), v.end(), dst);
  return out;
}

ViewNormalizer::ViewNormalizer(std::vector<float> mean, std::vector<float> scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) throw ConfigError("view normalizer mean/scale length mismatch");
  for (float s : scale_) {
    if (!(s > 0.0f) || !std::isfinite(s)) throw ConfigError("view normalizer scale must be positive");
  }
}

ViewNormalizer ViewNormalizer::fit(std::span<const ViewVector> views) {
  if (views.empty()) throw ConfigError("cannot fit view normalizer on no views");
  const auto d = static_cast<std::size_t>(views[0].size());
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  for (const auto& v : views) {
    if (static_cast<std::size_t>(v.size()) != d) throw SchemaError("mixed view dimensions in normalizer fit");
    for (std::size_t i = 0; i < d; ++i) sum[i] += v[static_cast<std::int64_t>(i)];
  }
  const auto n = static_cast<double>(views.size());
  std::vector<float> mean(d), scale(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double m = sum[i] / n;
    for (const auto& v : views) {
      const double e = v[static_cast<std::int64_t>(i)] - m;
      sq[i] += e * e;
    }
    const double sd = std::sqrt(sq[i] / n);
    mean[i] = static_cast<float>(m);
    scale[i] = sd > 1e-6 ? static_cast<float>(sd) : 1.0f;
  }
  return ViewNormalizer(std::move(mean), std::move(scale));
}

ViewNormalizer ViewNormalizer::identity(std::int64_t dim) {
  return ViewNormalizer(std::vector<float>(static_cast<std::size_t>(dim), 0.0f),
                        std::vector<float>(static_cast<std::size_t>(dim), 1.0f));
}

std::vector<float> ViewNormalizer::apply(std::span<const float> values) const {
  if (values.size() != mean_.size()) {
    throw SchemaError("view normalizer expects " + std::to_string(mean_.size()) + " components, got " +
                      std::to_string(values.size()));
  }
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean_[i]) / scale_[i];
  return out;
}

std::vector<float> ViewNormalizer::apply_partial(const ViewVector& v) const {
  const auto full = apply(v);
  std::vector<float> out;
  for (auto idx : v.schema().partial_mask()) out.push_back(full[static_cast<std::size_t>(idx)]);
  return out;
}

std::string format_view_metadata(const ViewVector& v) {
  std::ostringstream os;
  std::int64_t off = 0;
  for (const auto& f : v.schema().fields()) {
    os << f.name << " =";
    for (std::int64_t i = 0; i < f.size; ++i) os << ' ' << format_float9(v[off + i]);
    os << '\n';
    off += f.size;
  }
  return os.str();
}

ViewVector parse_view_metadata(const SchemaPtr& schema, const std::string& text) {
  std::map<std::string, std::vector<float>> fields;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto kv = split_key_value(line);
    if (!kv) continue;
    auto& [key, value] = *kv;
    if (fields.count(key)) throw SchemaError("duplicate view field '" + key + "' on line " + std::to_string(lineno));
    std::vector<float> comps;
    for (const auto& tok : split_ws(value)) comps.push_back(parse_float(tok, "view field '" + key + "'"));
    fields[key] = std::move(comps);
  }
  return make_view_vector(schema, fields);
}

void write_view_metadata(const std::filesystem::path& path, const ViewVector& v) {
  write_text_file(path, format_view_metadata(v));
}

ViewVector read_view_metadata(const std::filesystem::path& path, const SchemaPtr& schema) {
  try {
    return parse_view_metadata(schema, read_text_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace novelview
