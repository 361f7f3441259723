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

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "novelview/tensor.hpp"

namespace novelview {

struct ViewField {
  std::string name;
  std::int64_t size = 1;
};

/// Layout of a camera parameter vector: named groups of components, plus the
/// subset (partial mask) that the view-dependent branch sees.
class ViewSchema {
 public:
  ViewSchema(std::string name, std::vector<ViewField> fields, std::vector<std::int64_t> partial_mask);

  /// CMU Panoptic layout, d = 14; default partial view is location + both pans.
  static std::shared_ptr<const ViewSchema> panoptic14();
  /// NTU RGB+D layout, d = 5; default partial view is both pans + viewpoint angle.
  static std::shared_ptr<const ViewSchema> ntu5();
  /// Looks up a built-in schema by name.
  static std::shared_ptr<const ViewSchema> builtin(const std::string& name);

  /// Copy of this schema with a different partial mask.
  std::shared_ptr<const ViewSchema> with_partial_mask(std::vector<std::int64_t> mask) const;

  const std::string& name() const { return name_; }
  std::int64_t dim() const { return dim_; }
  std::int64_t partial_dim() const { return static_cast<std::int64_t>(partial_mask_.size()); }
  const std::vector<ViewField>& fields() const { return fields_; }
  const std::vector<std::int64_t>& partial_mask() const { return partial_mask_; }

  /// Offset of the named field in the flat vector; throws SchemaError if absent.
  std::int64_t offset_of(const std::string& field) const;
  const ViewField& field(const std::string& name) const;

 private:
  std::string name_;
  std::vector<ViewField> fields_;
  std::vector<std::int64_t> partial_mask_;
  std::int64_t dim_ = 0;
};

using SchemaPtr = std::shared_ptr<const ViewSchema>;

/// Full camera parameter vector v (length d).
class ViewVector {
 public:
  ViewVector() = default;
  ViewVector(SchemaPtr schema, std::vector<float> values);

  const ViewSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  std::span<const float> values() const { return values_; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
  float operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

  /// Components of one named field.
  std::span<const float> field(const std::string& name) const;

  friend bool operator==(const ViewVector& a, const ViewVector& b);

 private:
  SchemaPtr schema_;
  std::vector<float> values_;
};

/// Partial view vector v^p, the components selected by the schema's mask.
class PartialViewVector {
 public:
  PartialViewVector(SchemaPtr schema, std::vector<float> values);

  const ViewSchema& schema() const { return *schema_; }
  std::span<const float> values() const { return values_; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

 private:
  SchemaPtr schema_;
  std::vector<float> values_;
};

/// Builds a view vector from named field groups, concatenated in schema order.
ViewVector make_view_vector(const SchemaPtr& schema, const std::map<std::string, std::vector<float>>& fields);

/// Gathers the schema's partial mask.
PartialViewVector partial_view(const ViewVector& v);

/// Trilinear interpolation of a single 1x1x1 sample onto a (T, H, W) grid,
/// which is a constant broadcast: out[t, h, w, :] = v.
Tensor embed_view(std::span<const float> v, std::int64_t t, std::int64_t h, std::int64_t w);

/// Per-component standardisation fitted on training-set view vectors.
class ViewNormalizer {
 public:
  ViewNormalizer() = default;
  ViewNormalizer(std::vector<float> mean, std::vector<float> scale);

  /// Components with (near) zero spread get unit scale.
  static ViewNormalizer fit(std::span<const ViewVector> views);
  static ViewNormalizer identity(std::int64_t dim);

  std::vector<float> apply(std::span<const float> values) const;
  std::vector<float> apply(const ViewVector& v) const { return apply(v.values()); }
  /// Normalised partial view: gathers the mask from the normalised full vector.
  std::vector<float> apply_partial(const ViewVector& v) const;

  const std::vector<float>& mean() const { return mean_; }
  const std::vector<float>& scale() const { return scale_; }
  std::int64_t dim() const { return static_cast<std::int64_t>(mean_.size()); }

 private:
  std::vector<float> mean_;
  std::vector<float> scale_;
};

/// Line-oriented `field = v1 v2 ...` text, values printed with 9 significant digits.
std::string format_view_metadata(const ViewVector& v);
ViewVector parse_view_metadata(const SchemaPtr& schema, const std::string& text);

void write_view_metadata(const std::filesystem::path& path, const ViewVector& v);
ViewVector read_view_metadata(const std::filesystem::path& path, const SchemaPtr& schema);

}  // namespace novelview
