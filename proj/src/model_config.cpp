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

#include "novelview/model_config.hpp"

#include <sstream>

#include "novelview/errors.hpp"
#include "novelview/text_util.hpp"

namespace novelview {
namespace {

std::vector<std::int64_t> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<std::int64_t> out;
  for (const auto& tok : split_ws(value)) {
    const auto v = try_parse_int(tok);
    if (!v) throw ConfigError("model." + key + ": '" + tok + "' is not an integer");
    out.push_back(*v);
  }
  return out;
}

std::int64_t parse_one_int(const std::string& key, const std::string& value) {
  const auto v = try_parse_int(trim(value));
  if (!v) throw ConfigError("model." + key + ": '" + value + "' is not an integer");
  return *v;
}

std::string join(const std::vector<std::int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid model config: " + what);
}

bool all_positive(const std::vector<std::int64_t>& v) {
  for (auto x : v)
    if (x < 1) return false;
  return true;
}

}  // namespace

std::string to_string(EncoderKind kind) { return kind == EncoderKind::kTiny ? "tiny" : "i3d_modified"; }

std::string to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::kFull: return "full";
    case AblationMode::kVdOnly: return "vd_only";
    case AblationMode::kGrOnly: return "gr_only";
  }
  return "full";
}

EncoderKind parse_encoder_kind(const std::string& text) {
  if (text == "tiny") return EncoderKind::kTiny;
  if (text == "i3d_modified") return EncoderKind::kI3dModified;
  throw ConfigError("unknown encoder '" + text + "' (expected tiny or i3d_modified)");
}

AblationMode parse_ablation_mode(const std::string& text) {
  if (text == "full") return AblationMode::kFull;
  if (text == "vd_only") return AblationMode::kVdOnly;
  if (text == "gr_only") return AblationMode::kGrOnly;
  throw ConfigError("unknown ablation mode '" + text + "' (expected full, vd_only or gr_only)");
}

ModelConfig ModelConfig::full_width() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.encoder_channels = 32;
  c.tiny_encoder_filters = {16, 24, 32};
  c.gr_filters = {16, 32};
  c.vd_filters = {8, 16};
  c.query_filters = 32;
  c.decoder_filters = {32, 32, 32, 32, 16, 8, 8, 3};
  return c;
}

void ModelConfig::validate() const {
  require(clip_res == 56 || clip_res == 112 || clip_res == 224, "clip_res must be 56, 112 or 224");
  require(clip_frames >= 1, "clip_frames must be positive");
  require(n_train >= 1, "n_train must be positive");
  require(encoder_channels >= 1, "encoder_channels must be positive");
  require(tiny_encoder_filters.size() == 3 && all_positive(tiny_encoder_filters), "tiny_encoder_filters needs 3 positive counts");
  require(gr_filters.size() == 2 && all_positive(gr_filters), "gr_filters needs 2 positive counts");
  require(vd_filters.size() == 2 && all_positive(vd_filters), "vd_filters needs 2 positive counts");
  require(lstm_kernel >= 1 && lstm_kernel % 2 == 1, "lstm_kernel must be odd and positive");
  require(query_filters >= 1, "query_filters must be positive");
  require(query_kernel >= 1 && query_kernel % 2 == 1, "query_kernel must be odd and positive");
  require(decoder_filters.size() == 8 && all_positive(decoder_filters), "decoder_filters needs 8 positive counts");
  require(decoder_filters.back() == 3, "the last decoder layer must emit 3 channels");
  require(decoder_kernels.size() == 8 && all_positive(decoder_kernels), "decoder_kernels needs 8 positive sizes");
  require(discriminator_filters.size() == 6 && all_positive(discriminator_filters),
          "discriminator_filters needs 6 positive counts");
  require(discriminator_kernel >= 1, "discriminator_kernel must be positive");
  const auto f = encoder_factors();
  require(clip_res % f[1] == 0, "clip_res must be divisible by the encoder's spatial factor");
  const auto schema_ptr = view_schema();
  (void)schema_ptr;
}

SchemaPtr ModelConfig::view_schema() const {
  auto s = ViewSchema::builtin(schema);
  if (!partial_mask.empty()) s = s->with_partial_mask(partial_mask);
  return s;
}

ag::Triple ModelConfig::encoder_factors() const {
  return encoder == EncoderKind::kTiny ? ag::Triple{4, 8, 8} : ag::Triple{8, 4, 4};
}

std::vector<ag::Triple> ModelConfig::upsampling_schedule() const {
  if (encoder == EncoderKind::kTiny) return {{2, 2, 2}, {2, 2, 2}, {1, 2, 2}};
  return {{2, 2, 2}, {2, 2, 2}, {2, 1, 1}};
}

ag::Triple ModelConfig::grid(int frames) const {
  const auto f = encoder_factors();
  if (frames < f[0] || frames % f[0] != 0) {
    throw ShapeError("clip length " + std::to_string(frames) + " is not a multiple of the encoder's temporal factor " +
                     std::to_string(f[0]));
  }
  if (clip_res % f[1] != 0) throw ShapeError("resolution not divisible by the encoder's spatial factor");
  return {frames / f[0], clip_res / f[1], clip_res / f[2]};
}

void ModelConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "encoder") encoder = parse_encoder_kind(value);
  else if (key == "clip_res") clip_res = static_cast<int>(parse_one_int(key, value));
  else if (key == "clip_frames") clip_frames = static_cast<int>(parse_one_int(key, value));
  else if (key == "schema") schema = value;
  else if (key == "partial_mask") partial_mask = parse_int_list(key, value);
  else if (key == "n_train") n_train = static_cast<int>(parse_one_int(key, value));
  else if (key == "encoder_channels") encoder_channels = parse_one_int(key, value);
  else if (key == "tiny_encoder_filters") tiny_encoder_filters = parse_int_list(key, value);
  else if (key == "gr_filters") gr_filters = parse_int_list(key, value);
  else if (key == "vd_filters") vd_filters = parse_int_list(key, value);
  else if (key == "lstm_kernel") lstm_kernel = static_cast<int>(parse_one_int(key, value));
  else if (key == "query_filters") query_filters = parse_one_int(key, value);
  else if (key == "query_kernel") query_kernel = static_cast<int>(parse_one_int(key, value));
  else if (key == "decoder_filters") decoder_filters = parse_int_list(key, value);
  else if (key == "decoder_kernels") decoder_kernels = parse_int_list(key, value);
  else if (key == "discriminator_filters") discriminator_filters = parse_int_list(key, value);
  else if (key == "discriminator_kernel") discriminator_kernel = static_cast<int>(parse_one_int(key, value));
  else if (key == "ablation") ablation = parse_ablation_mode(value);
  else if (key == "seed") {
    const auto v = parse_one_int(key, value);
    if (v < 0) throw ConfigError("model.seed must be non-negative");
    seed = static_cast<std::uint64_t>(v);
  } else if (key == "i3d_weights") i3d_weights = value;
  else throw ConfigError("unknown model key '" + key + "'");
}

std::string ModelConfig::format() const {
  std::ostringstream os;
  os << "encoder = " << to_string(encoder) << "\n"
     << "clip_res = " << clip_res << "\n"
     << "clip_frames = " << clip_frames << "\n"
     << "schema = " << schema << "\n"
     << "partial_mask = " << join(partial_mask) << "\n"
     << "n_train = " << n_train << "\n"
     << "encoder_channels = " << encoder_channels << "\n"
     << "tiny_encoder_filters = " << join(tiny_encoder_filters) << "\n"
     << "gr_filters = " << join(gr_filters) << "\n"
     << "vd_filters = " << join(vd_filters) << "\n"
     << "lstm_kernel = " << lstm_kernel << "\n"
     << "query_filters = " << query_filters << "\n"
     << "query_kernel = " << query_kernel << "\n"
     << "decoder_filters = " << join(decoder_filters) << "\n"
     << "decoder_kernels = " << join(decoder_kernels) << "\n"
     << "discriminator_filters = " << join(discriminator_filters) << "\n"
     << "discriminator_kernel = " << discriminator_kernel << "\n"
     << "ablation = " << to_string(ablation) << "\n"
     << "seed = " << seed << "\n"
     << "i3d_weights = " << i3d_weights << "\n";
  return os.str();
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig c;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto kv = split_key_value(line);
    if (kv) c.set(kv->first, kv->second);
  }
  c.validate();
  return c;
}

}  // namespace novelview
