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

#include "novelview/train_config.hpp"

#include <sstream>

#include "novelview/errors.hpp"
#include "novelview/text_util.hpp"

namespace novelview {
namespace {

std::int64_t as_int(const std::string& key, const std::string& v) {
  const auto x = try_parse_int(v);
  if (!x) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return *x;
}

double as_double(const std::string& key, const std::string& v) {
  const auto x = try_parse_double(v);
  if (!x) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return *x;
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> as_list(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& s : split(v, ',')) {
    const auto t = trim(s);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(Grouping g) { return g == Grouping::kPanel ? "panel" : "all"; }

Grouping parse_grouping(const std::string& text) {
  if (text == "panel") return Grouping::kPanel;
  if (text == "all") return Grouping::kAll;
  throw ConfigError("unknown grouping '" + text + "' (expected panel or all)");
}

MetricSet parse_metric_set(const std::string& text) {
  MetricSet m{false, false, false};
  for (const auto& name : as_list(text)) {
    if (name == "ssim") m.ssim = true;
    else if (name == "psnr") m.psnr = true;
    else if (name == "fvd") m.fvd = true;
    else throw ConfigError("unknown metric '" + name + "'");
  }
  return m;
}

std::string to_string(const MetricSet& m) {
  std::vector<std::string> names;
  if (m.ssim) names.emplace_back("ssim");
  if (m.psnr) names.emplace_back("psnr");
  if (m.fvd) names.emplace_back("fvd");
  return join(names);
}

void TrainConfig::validate() const {
  model.validate();
  loss.validate();
  if (optimizer != "adam") throw ConfigError("unsupported optimizer '" + optimizer + "' (only adam)");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("optim.lr must be positive");
  if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0) {
    throw ConfigError("optim.beta1 and optim.beta2 must lie in [0, 1)");
  }
  if (batch < 1) throw ConfigError("optim.batch must be at least 1");
  if (iterations < 1) throw ConfigError("train.iterations must be at least 1");
  if (checkpoint_every < 0 || eval_every < 0) throw ConfigError("cadences must be non-negative");
  if (eval.offset < 0) throw ConfigError("eval.offset must be non-negative");
  if (eval.metrics.empty()) throw ConfigError("eval.metrics selects nothing");
}

ModelConfig TrainConfig::seeded_model() const {
  ModelConfig m = model;
  m.seed = seed;
  return m;
}

void TrainConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key.rfind("model.", 0) == 0) {
    const std::string sub = key.substr(6);
    if (sub == "preset") {
      const ModelConfig keep = model;
      if (v == "desk") model = ModelConfig::desk();
      else if (v == "full_width") model = ModelConfig::full_width();
      else throw ConfigError("model.preset: expected desk or full_width, got '" + v + "'");
      model.encoder = keep.encoder;
      model.clip_res = keep.clip_res;
      model.clip_frames = keep.clip_frames;
      model.schema = keep.schema;
      model.partial_mask = keep.partial_mask;
      model.n_train = keep.n_train;
      model.ablation = keep.ablation;
      model.i3d_weights = keep.i3d_weights;
    } else {
      model.set(sub, v);
    }
  } else if (key == "data.root") dataset = v;
  else if (key == "data.grouping") grouping = parse_grouping(v);
  else if (key == "data.num_inputs") model.n_train = static_cast<int>(as_int(key, v));
  else if (key == "loss.preset") loss = LossWeights::preset(v);
  else if (key == "loss.lambda_r") loss.lambda_r = as_double(key, v);
  else if (key == "loss.lambda_p") loss.lambda_p = as_double(key, v);
  else if (key == "loss.lambda_adv") loss.lambda_adv = as_double(key, v);
  else if (key == "loss.saturating") saturating = as_bool(key, v);
  else if (key == "loss.vgg19_weights") vgg19_weights = v;
  else if (key == "loss.desk_fallback") desk_fallback = as_bool(key, v);
  else if (key == "optim.family") optimizer = v;
  else if (key == "optim.lr") adam.learning_rate = as_double(key, v);
  else if (key == "optim.beta1") adam.beta1 = as_double(key, v);
  else if (key == "optim.beta2") adam.beta2 = as_double(key, v);
  else if (key == "optim.epsilon") adam.epsilon = as_double(key, v);
  else if (key == "optim.batch") batch = static_cast<int>(as_int(key, v));
  else if (key == "train.iterations") iterations = static_cast<int>(as_int(key, v));
  else if (key == "train.seed") {
    const auto s = as_int(key, v);
    if (s < 0) throw ConfigError("train.seed must be non-negative");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "train.out") out = v;
  else if (key == "train.checkpoint_every") checkpoint_every = static_cast<int>(as_int(key, v));
  else if (key == "train.eval_every") eval_every = static_cast<int>(as_int(key, v));
  else if (key == "eval.inputs") eval.inputs = as_list(v);
  else if (key == "eval.queries") eval.queries = as_list(v);
  else if (key == "eval.offset") eval.offset = static_cast<int>(as_int(key, v));
  else if (key == "eval.metrics") eval.metrics = parse_metric_set(v);
  else if (key == "eval.clip_weights") eval.clip_weights = v;
  else if (key == "eval.checkpoint") eval.checkpoint = v;
  else throw ConfigError("unknown configuration key '" + key + "'");
}

std::string TrainConfig::format() const {
  std::ostringstream os;
  os << "data.root = " << dataset.string() << "\n"
     << "data.grouping = " << to_string(grouping) << "\n";
  std::istringstream model_lines(model.format());
  for (std::string line; std::getline(model_lines, line);) os << "model." << line << "\n";
  os << "loss.lambda_r = " << num(loss.lambda_r) << "\n"
     << "loss.lambda_p = " << num(loss.lambda_p) << "\n"
     << "loss.lambda_adv = " << num(loss.lambda_adv) << "\n"
     << "loss.saturating = " << (saturating ? "true" : "false") << "\n"
     << "loss.vgg19_weights = " << vgg19_weights << "\n"
     << "loss.desk_fallback = " << (desk_fallback ? "true" : "false") << "\n"
     << "optim.family = " << optimizer << "\n"
     << "optim.lr = " << num(adam.learning_rate) << "\n"
     << "optim.beta1 = " << num(adam.beta1) << "\n"
     << "optim.beta2 = " << num(adam.beta2) << "\n"
     << "optim.epsilon = " << num(adam.epsilon) << "\n"
     << "optim.batch = " << batch << "\n"
     << "train.iterations = " << iterations << "\n"
     << "train.seed = " << seed << "\n"
     << "train.out = " << out.string() << "\n"
     << "train.checkpoint_every = " << checkpoint_every << "\n"
     << "train.eval_every = " << eval_every << "\n"
     << "eval.inputs = " << join(eval.inputs) << "\n"
     << "eval.queries = " << join(eval.queries) << "\n"
     << "eval.offset = " << eval.offset << "\n"
     << "eval.metrics = " << to_string(eval.metrics) << "\n"
     << "eval.clip_weights = " << eval.clip_weights << "\n"
     << "eval.checkpoint = " << eval.checkpoint.string() << "\n";
  return os.str();
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig c;
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    try {
      const auto kv = split_key_value(line);
      if (kv) c.set(kv->first, kv->second);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file '" + path.string() + "' not found");
  try {
    return parse(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace novelview
