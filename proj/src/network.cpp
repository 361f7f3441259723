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

#include "novelview/network.hpp"

#include <spdlog/spdlog.h>

#include "novelview/archive.hpp"
#include "novelview/errors.hpp"

namespace novelview {
namespace {

using ag::Triple;
using ag::Var;

class TinyEncoder final : public VideoEncoder {
 public:
  TinyEncoder(const ModelConfig& cfg, ParameterSet& params, Rng& rng) {
    const auto& f = cfg.tiny_encoder_filters;
    convs_.emplace_back(params, "encoder.conv1", 3, f[0], Triple{3, 3, 3}, Triple{1, 2, 2}, rng);
    convs_.emplace_back(params, "encoder.conv2", f[0], f[1], Triple{3, 3, 3}, Triple{2, 2, 2}, rng);
    convs_.emplace_back(params, "encoder.conv3", f[1], f[2], Triple{3, 3, 3}, Triple{2, 2, 2}, rng);
    convs_.emplace_back(params, "encoder.project", f[2], cfg.encoder_channels, Triple{1, 1, 1}, Triple{1, 1, 1}, rng);
  }

  Var operator()(const Var& clip) const override {
    Var x = clip;
    for (const auto& c : convs_) x = ag::leaky_relu(c(x));
    return x;
  }

 private:
  std::vector<Conv3d> convs_;
};

// Inception module: 1x1 | 1x1 -> 3x3x3 | 1x1 -> 3x3x3 | maxpool -> 1x1.
class Inception {
 public:
  Inception(ParameterSet& params, const std::string& name, std::int64_t in, std::array<std::int64_t, 6> f, Rng& rng)
      : b0_(params, name + ".b0", in, f[0], {1, 1, 1}, {1, 1, 1}, rng),
        b1a_(params, name + ".b1a", in, f[1], {1, 1, 1}, {1, 1, 1}, rng),
        b1b_(params, name + ".b1b", f[1], f[2], {3, 3, 3}, {1, 1, 1}, rng),
        b2a_(params, name + ".b2a", in, f[3], {1, 1, 1}, {1, 1, 1}, rng),
        b2b_(params, name + ".b2b", f[3], f[4], {3, 3, 3}, {1, 1, 1}, rng),
        b3_(params, name + ".b3", in, f[5], {1, 1, 1}, {1, 1, 1}, rng),
        out_(f[0] + f[2] + f[4] + f[5]) {}

  Var operator()(const Var& x) const {
    const Var a = ag::relu(b0_(x));
    const Var b = ag::relu(b1b_(ag::relu(b1a_(x))));
    const Var c = ag::relu(b2b_(ag::relu(b2a_(x))));
    const Var d = ag::relu(b3_(ag::max_pool3d(x, {3, 3, 3}, {1, 1, 1})));
    return ag::concat_channels({a, b, c, d});
  }
  std::int64_t out_channels() const { return out_; }

 private:
  Conv3d b0_, b1a_, b1b_, b2a_, b2b_, b3_;
  std::int64_t out_;
};

// Inception-v1 I3D trunk with the max pool after block 2 removed and the
// later pools striding 2x1x1, then a 1x1x1 projection to C_e channels.
// Batch norm is folded into the convolution biases.
class I3dEncoder final : public VideoEncoder {
 public:
  I3dEncoder(const ModelConfig& cfg, ParameterSet& params, Rng& rng)
      : conv1a_(params, "encoder.conv1a", 3, 64, {7, 7, 7}, {2, 2, 2}, rng),
        conv2b_(params, "encoder.conv2b", 64, 64, {1, 1, 1}, {1, 1, 1}, rng),
        conv2c_(params, "encoder.conv2c", 64, 192, {3, 3, 3}, {1, 1, 1}, rng) {
    const std::array<std::pair<const char*, std::array<std::int64_t, 6>>, 9> spec{{
        {"mixed_3b", {64, 96, 128, 16, 32, 32}},
        {"mixed_3c", {128, 128, 192, 32, 96, 64}},
        {"mixed_4b", {192, 96, 208, 16, 48, 64}},
        {"mixed_4c", {160, 112, 224, 24, 64, 64}},
        {"mixed_4d", {128, 128, 256, 24, 64, 64}},
        {"mixed_4e", {112, 144, 288, 32, 64, 64}},
        {"mixed_4f", {256, 160, 320, 32, 128, 128}},
        {"mixed_5b", {256, 160, 320, 32, 128, 128}},
        {"mixed_5c", {384, 192, 384, 48, 128, 128}},
    }};
    std::int64_t ch = 192;
    for (const auto& [name, f] : spec) {
      blocks_.emplace_back(params, std::string("encoder.") + name, ch, f, rng);
      ch = blocks_.back().out_channels();
    }
    project_ = Conv3d(params, "encoder.project", ch, cfg.encoder_channels, {1, 1, 1}, {1, 1, 1}, rng);
  }

  Var operator()(const Var& clip) const override {
    Var x = ag::relu(conv1a_(clip));
    x = ag::max_pool3d(x, {1, 3, 3}, {1, 2, 2});
    x = ag::relu(conv2c_(ag::relu(conv2b_(x))));
    x = blocks_[0](x);
    x = blocks_[1](x);
    x = ag::max_pool3d(x, {3, 3, 3}, {2, 1, 1});
    for (int i = 2; i < 7; ++i) x = blocks_[static_cast<std::size_t>(i)](x);
    x = ag::max_pool3d(x, {2, 2, 2}, {2, 1, 1});
    x = blocks_[7](x);
    x = blocks_[8](x);
    return ag::relu(project_(x));
  }

 private:
  Conv3d conv1a_, conv2b_, conv2c_;
  std::vector<Inception> blocks_;
  Conv3d project_;
};

Triple cube(std::int64_t k) {
  const int v = static_cast<int>(k);
  return {v, v, v};
}

void load_encoder_weights(ParameterSet& params, const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    spdlog::warn("encoder weights '{}' not found; using random initialisation", path);
    return;
  }
  const Archive a = read_archive(path, "NVWEIGHT");
  int loaded = 0;
  for (auto* p : params.with_prefix("encoder.")) {
    auto it = a.tensors.find(p->name());
    if (it == a.tensors.end()) continue;
    if (it->second.shape() != p->shape()) {
      throw ConfigError(path + ": '" + p->name() + "' has shape " + to_string(it->second.shape()) + ", expected " +
                        to_string(p->shape()));
    }
    p->var().mutable_value() = it->second;
    ++loaded;
  }
  spdlog::info("loaded {} encoder arrays from '{}'", loaded, path);
}

}  // namespace

std::unique_ptr<VideoEncoder> make_encoder(const ModelConfig& cfg, ParameterSet& params, Rng& rng) {
  if (cfg.encoder == EncoderKind::kTiny) return std::make_unique<TinyEncoder>(cfg, params, rng);
  return std::make_unique<I3dEncoder>(cfg, params, rng);
}

GeneratorInput make_generator_input(const std::vector<const TrainingExample*>& examples, Tensor* target) {
  if (examples.empty()) throw ShapeError("empty batch");
  const std::size_t n = examples.front()->inputs.size();
  GeneratorInput in;
  std::vector<Tensor> parts;
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<Tensor> clips, views;
    for (const auto* ex : examples) {
      if (ex->inputs.size() != n) throw ShapeError("examples in a batch need the same number of input views");
      clips.push_back(ex->inputs[v].frames());
      const auto values = ex->inputs[v].view.values();
      views.emplace_back(Shape{static_cast<std::int64_t>(values.size())}, std::vector<float>(values.begin(), values.end()));
    }
    in.clips.push_back(stack(clips));
    in.views.push_back(stack(views));
  }
  std::vector<Tensor> queries, targets;
  for (const auto* ex : examples) {
    const auto values = ex->query_view.values();
    queries.emplace_back(Shape{static_cast<std::int64_t>(values.size())}, std::vector<float>(values.begin(), values.end()));
    if (target) targets.push_back(ex->target.frames());
  }
  in.query_view = stack(queries);
  if (target) *target = stack(targets);
  return in;
}

GeneratorInput make_generator_input(const std::vector<TrainingExample>& examples, Tensor* target) {
  std::vector<const TrainingExample*> ptrs;
  for (const auto& e : examples) ptrs.push_back(&e);
  return make_generator_input(ptrs, target);
}

Generator::Generator(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  schema_ = cfg_.view_schema();
  normalizer_ = ViewNormalizer::identity(schema_->dim());
  Rng rng = Rng::derived(cfg_.seed, 0);
  const std::int64_t d = schema_->dim(), dp = schema_->partial_dim();
  const Triple lk = cube(cfg_.lstm_kernel);
  encoder_ = make_encoder(cfg_, params_, rng);
  if (has_global_branch()) {
    gr_ = ConvLstmAggregator(params_, "gr", cfg_.encoder_channels + d, cfg_.gr_filters[0], cfg_.gr_filters[1], lk, rng);
    query_ = Conv3d(params_, "query", cfg_.gr_filters[1] + d, cfg_.query_filters, cube(cfg_.query_kernel),
                    {1, 1, 1}, rng);
  }
  if (has_view_dependent_branch()) {
    vd_fc1_ = Linear(params_, "vd.fc1", dp, dp, rng);
    vd_fc2_ = Linear(params_, "vd.fc2", 2 * dp, dp, rng);
    vd_ = ConvLstmAggregator(params_, "vd", cfg_.encoder_channels + dp, cfg_.vd_filters[0], cfg_.vd_filters[1], lk, rng);
  }
  std::int64_t ch = cfg_.dual_channels();
  for (std::size_t i = 0; i < 8; ++i) {
    decoder_.emplace_back(params_, "decoder.conv" + std::to_string(i + 1), ch, cfg_.decoder_filters[i],
                          cube(cfg_.decoder_kernels[i]), Triple{1, 1, 1}, rng);
    ch = cfg_.decoder_filters[i];
  }
  if (cfg_.encoder == EncoderKind::kI3dModified && !cfg_.i3d_weights.empty()) {
    load_encoder_weights(params_, cfg_.i3d_weights);
  }
}

void Generator::set_normalizer(ViewNormalizer n) {
  if (n.dim() != schema_->dim()) throw ConfigError("view normalizer dimension does not match the schema");
  normalizer_ = std::move(n);
}

Tensor Generator::normalized(const Tensor& views) const {
  if (views.rank() != 2 || views.dim(1) != schema_->dim()) {
    throw ShapeError("view batch must be (B, " + std::to_string(schema_->dim()) + "), got " + to_string(views.shape()));
  }
  Tensor out(views.shape());
  const auto d = views.dim(1);
  for (std::int64_t b = 0; b < views.dim(0); ++b) {
    const auto row = normalizer_.apply(std::span<const float>(views.data() + b * d, static_cast<std::size_t>(d)));
    std::copy(row.begin(), row.end(), out.data() + b * d);
  }
  return out;
}

Tensor Generator::normalized_partial(const Tensor& views) const {
  const Tensor full = normalized(views);
  const auto& mask = schema_->partial_mask();
  const auto d = full.dim(1), dp = static_cast<std::int64_t>(mask.size());
  Tensor out({full.dim(0), dp});
  for (std::int64_t b = 0; b < full.dim(0); ++b)
    for (std::int64_t k = 0; k < dp; ++k) out[b * dp + k] = full[b * d + mask[static_cast<std::size_t>(k)]];
  return out;
}

std::vector<Var> Generator::encode(const std::vector<Var>& clips) const {
  if (clips.empty()) throw ShapeError("encode needs at least one clip");
  for (const auto& c : clips) {
    if (c.value().rank() != 5 || c.dim(2) != cfg_.clip_res || c.dim(3) != cfg_.clip_res || c.dim(4) != 3) {
      throw ShapeError("clip batch " + to_string(c.shape()) + " does not match (B, T, " + std::to_string(cfg_.clip_res) +
                       ", " + std::to_string(cfg_.clip_res) + ", 3)");
    }
    if (c.shape() != clips.front().shape()) throw ShapeError("clips differ in shape");
  }
  const Triple grid = cfg_.grid(static_cast<int>(clips.front().dim(1)));
  const Var joint = clips.size() == 1 ? clips.front() : ag::concat_batch(clips);
  const Var features = (*encoder_)(joint);
  const Shape want{joint.dim(0), grid[0], grid[1], grid[2], cfg_.encoder_channels};
  if (features.shape() != want) {
    throw ShapeError("encoder produced " + to_string(features.shape()) + ", expected " + to_string(want));
  }
  if (clips.size() == 1) return {features};
  std::vector<Var> out;
  const auto b = clips.front().dim(0);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    out.push_back(ag::slice_batch(features, static_cast<std::int64_t>(i) * b, static_cast<std::int64_t>(i + 1) * b));
  }
  return out;
}

Var Generator::global_representation(const std::vector<Var>& features, const std::vector<Tensor>& views) const {
  if (!has_global_branch()) throw ConfigError("this model was built without the global branch");
  if (features.size() != views.size() || features.empty()) {
    throw ShapeError("global representation needs one view per feature (" + std::to_string(features.size()) + " vs " +
                     std::to_string(views.size()) + ")");
  }
  std::vector<Var> seq;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& e = features[i];
    const Var v = ag::broadcast_to_grid(Var(normalized(views[i])), e.dim(1), e.dim(2), e.dim(3));
    seq.push_back(ag::concat_channels({e, v}));
  }
  return gr_(seq);
}

Var Generator::view_dependent_representation(const std::vector<Var>& features, const std::vector<Tensor>& views,
                                             const Tensor& query_view) const {
  if (!has_view_dependent_branch()) throw ConfigError("this model was built without the view-dependent branch");
  if (features.size() != views.size() || features.empty()) {
    throw ShapeError("view-dependent representation needs one view per feature");
  }
  const Var q = ag::leaky_relu(vd_fc1_(Var(normalized_partial(query_view))));
  std::vector<Var> seq;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& e = features[i];
    const Var p = ag::leaky_relu(vd_fc1_(Var(normalized_partial(views[i]))));
    const Var rel = vd_fc2_(ag::concat_channels({p, q}));
    seq.push_back(ag::concat_channels({e, ag::broadcast_to_grid(rel, e.dim(1), e.dim(2), e.dim(3))}));
  }
  return vd_(seq);
}

Var Generator::query(const Var& global, const Tensor& query_view) const {
  if (!has_global_branch()) throw ConfigError("this model was built without the query network");
  const Var v = ag::broadcast_to_grid(Var(normalized(query_view)), global.dim(1), global.dim(2), global.dim(3));
  return ag::leaky_relu(query_(ag::concat_channels({global, v})));
}

Var Generator::fuse(const Var& retrieved, const Var& view_dependent) const {
  if (!retrieved.defined() && !view_dependent.defined()) throw ShapeError("fuse needs at least one branch");
  const Var& like = retrieved.defined() ? retrieved : view_dependent;
  const Var a = retrieved.defined() ? retrieved : ag::zeros_with_channels(like, cfg_.retrieved_channels());
  const Var b = view_dependent.defined() ? view_dependent : ag::zeros_with_channels(like, cfg_.view_dependent_channels());
  if (a.dim(4) != cfg_.retrieved_channels() || b.dim(4) != cfg_.view_dependent_channels()) {
    throw ShapeError("fuse expects " + std::to_string(cfg_.retrieved_channels()) + " + " +
                     std::to_string(cfg_.view_dependent_channels()) + " channels");
  }
  for (int ax = 0; ax < 4; ++ax) {
    if (a.dim(ax) != b.dim(ax)) throw ShapeError("fuse inputs live on different grids");
  }
  return ag::concat_channels({a, b});
}

Var Generator::decode(const Var& dual, int frames_out) const {
  if (dual.value().rank() != 5 || dual.dim(4) != cfg_.dual_channels()) {
    throw ShapeError("decoder input must have " + std::to_string(cfg_.dual_channels()) + " channels");
  }
  const auto f = cfg_.encoder_factors();
  if (dual.dim(1) * f[0] != frames_out) {
    throw ShapeError("cannot decode " + std::to_string(frames_out) + " frames from a temporal grid of " +
                     std::to_string(dual.dim(1)));
  }
  const auto schedule = cfg_.upsampling_schedule();
  Var x = dual;
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    if (i >= 4 && i <= 6) x = ag::upsample_nearest(x, schedule[i - 4]);
    x = decoder_[i](x);
    x = i + 1 == decoder_.size() ? ag::tanh(x) : ag::leaky_relu(x);
  }
  return x;
}

void Generator::check_input(const GeneratorInput& input) const {
  if (input.clips.empty()) throw ShapeError("generator input has no clips");
  if (input.clips.size() != input.views.size()) throw ShapeError("generator input needs one view per clip");
  if (input.query_view.rank() != 2 || input.query_view.dim(0) != input.clips.front().dim(0)) {
    throw ShapeError("query view batch does not match the clip batch");
  }
}

Var Generator::forward(const GeneratorInput& input, AblationMode mode) const {
  check_input(input);
  if ((mode != AblationMode::kVdOnly && !has_global_branch()) ||
      (mode != AblationMode::kGrOnly && !has_view_dependent_branch())) {
    throw ConfigError("model built as " + to_string(cfg_.ablation) + " cannot run in " + to_string(mode) + " mode");
  }
  std::vector<Var> clips;
  for (const auto& c : input.clips) clips.emplace_back(c);
  const auto features = encode(clips);
  Var retrieved, vd;
  if (mode != AblationMode::kVdOnly) {
    retrieved = query(global_representation(features, input.views), input.query_view);
  }
  if (mode != AblationMode::kGrOnly) {
    vd = view_dependent_representation(features, input.views, input.query_view);
  }
  return decode(fuse(retrieved, vd), input.frames());
}

Discriminator::Discriminator(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = Rng::derived(cfg_.seed, 1);
  std::int64_t ch = 3;
  std::int64_t t = cfg_.clip_frames, s = cfg_.clip_res;
  for (std::size_t i = 0; i < 6; ++i) {
    convs_.emplace_back(params_, "disc.conv" + std::to_string(i + 1), ch, cfg_.discriminator_filters[i],
                        cube(cfg_.discriminator_kernel), Triple{2, 2, 2}, rng);
    ch = cfg_.discriminator_filters[i];
    t = (t + 1) / 2;
    s = (s + 1) / 2;
  }
  fc_ = Linear(params_, "disc.fc", t * s * s * ch, 1, rng);
}

Var Discriminator::logits(const Var& clip) const {
  if (clip.value().rank() != 5 || clip.dim(1) != cfg_.clip_frames || clip.dim(2) != cfg_.clip_res ||
      clip.dim(3) != cfg_.clip_res || clip.dim(4) != 3) {
    throw ShapeError("discriminator expects (B, " + std::to_string(cfg_.clip_frames) + ", " +
                     std::to_string(cfg_.clip_res) + ", " + std::to_string(cfg_.clip_res) + ", 3), got " +
                     to_string(clip.shape()));
  }
  Var x = clip;
  for (const auto& c : convs_) x = ag::leaky_relu(c(x));
  return fc_(ag::flatten(x));
}

Var Discriminator::operator()(const Var& clip) const { return ag::sigmoid(logits(clip)); }

}  // namespace novelview
