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

#include "novelview/checkpoint.hpp"

#include <sstream>

#include "novelview/errors.hpp"
#include "novelview/text_util.hpp"

namespace novelview {
namespace {

std::string floats(const std::vector<float>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_float9(v[i]);
  return s;
}

std::vector<float> parse_floats(const std::string& text) {
  std::vector<float> out;
  for (const auto& part : split(text, ',')) {
    if (!trim(part).empty()) out.push_back(parse_float(part, "normalizer value"));
  }
  return out;
}

void copy_into(const std::string& prefix, const Archive& a, ParameterSet& params, const std::string& what) {
  std::size_t found = 0;
  for (auto* p : params.all()) {
    const auto it = a.tensors.find(prefix + p->name());
    if (it == a.tensors.end()) throw IoError("checkpoint lacks " + what + " array '" + p->name() + "'");
    if (it->second.shape() != p->shape()) {
      throw IoError("checkpoint array '" + p->name() + "' has shape " + to_string(it->second.shape()) +
                    " but the rebuilt " + what + " expects " + to_string(p->shape()));
    }
    p->var().mutable_value() = it->second;
    ++found;
  }
  std::size_t stored = 0;
  for (const auto& [name, t] : a.tensors) stored += name.rfind(prefix, 0) == 0 ? 1 : 0;
  if (stored != found) throw IoError("checkpoint holds " + what + " arrays the rebuilt model does not have");
}

std::map<std::string, Tensor> with_prefix(const Archive& a, const std::string& prefix) {
  std::map<std::string, Tensor> out;
  for (const auto& [name, t] : a.tensors) {
    if (name.rfind(prefix, 0) == 0) out[name.substr(prefix.size())] = t;
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointSource& s) {
  if (!s.generator) throw ConfigError("checkpoint needs a generator");
  Archive a;
  std::ostringstream text;
  text << "format = novelview-checkpoint 1\n"
       << "iteration = " << s.iteration << "\n"
       << "rng = " << s.rng_state << "\n"
       << "normalizer.mean = " << floats(s.generator->normalizer().mean()) << "\n"
       << "normalizer.scale = " << floats(s.generator->normalizer().scale()) << "\n"
       << "adam_g.steps = " << (s.generator_optimizer ? s.generator_optimizer->steps() : 0) << "\n"
       << "adam_d.steps = " << (s.discriminator_optimizer ? s.discriminator_optimizer->steps() : 0) << "\n";
  std::istringstream model_lines(s.generator->config().format());
  for (std::string line; std::getline(model_lines, line);) text << "model." << line << "\n";
  std::istringstream run_lines(s.run_config);
  for (std::string line; std::getline(run_lines, line);) {
    if (!trim(line).empty()) text << "run." << line << "\n";
  }
  a.text = text.str();
  for (const auto* p : s.generator->params().all()) a.tensors["G/" + p->name()] = p->var().value();
  if (s.discriminator) {
    for (const auto* p : s.discriminator->params().all()) a.tensors["D/" + p->name()] = p->var().value();
  }
  if (s.generator_optimizer) {
    for (const auto& [k, t] : s.generator_optimizer->state()) a.tensors["adam_g/" + k] = t;
  }
  if (s.discriminator_optimizer) {
    for (const auto& [k, t] : s.discriminator_optimizer->state()) a.tensors["adam_d/" + k] = t;
  }
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  write_archive(path, kCheckpointMagic, a);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint c;
  c.arrays = read_archive(path, kCheckpointMagic);
  std::vector<float> mean, scale;
  std::ostringstream model_text, run_text;
  bool format_seen = false;
  std::istringstream is(c.arrays.text);
  for (std::string line; std::getline(is, line);) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      if (trim(line).empty()) continue;
      throw IoError(path.string() + ": malformed checkpoint line '" + line + "'");
    }
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    try {
      if (key == "format") {
        if (value != "novelview-checkpoint 1") throw IoError(path.string() + ": unsupported checkpoint format");
        format_seen = true;
      } else if (key == "iteration") {
        c.iteration = std::stoll(value);
      } else if (key == "rng") {
        c.rng_state = value;
      } else if (key == "normalizer.mean") {
        mean = parse_floats(value);
      } else if (key == "normalizer.scale") {
        scale = parse_floats(value);
      } else if (key == "adam_g.steps") {
        c.generator_steps = std::stoll(value);
      } else if (key == "adam_d.steps") {
        c.discriminator_steps = std::stoll(value);
      } else if (key.rfind("model.", 0) == 0) {
        model_text << key.substr(6) << " = " << value << "\n";
      } else if (key.rfind("run.", 0) == 0) {
        run_text << key.substr(4) << " = " << value << "\n";
      } else {
        throw IoError(path.string() + ": unknown checkpoint key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ": bad value for '" + key + "'");
    }
  }
  if (!format_seen) throw IoError(path.string() + ": missing checkpoint format line");
  try {
    c.model = ModelConfig::parse(model_text.str());
  } catch (const ConfigError& e) {
    throw IoError(path.string() + ": stored model configuration is invalid: " + e.what());
  }
  if (mean.size() != scale.size()) throw IoError(path.string() + ": normalizer fields disagree in length");
  c.normalizer = ViewNormalizer(mean, scale);
  c.run_config = run_text.str();
  return c;
}

std::unique_ptr<Generator> Checkpoint::make_generator() const {
  auto g = std::make_unique<Generator>(model);
  copy_into("G/", arrays, g->params(), "generator");
  g->set_normalizer(normalizer);
  return g;
}

void Checkpoint::restore(Discriminator& d) const { copy_into("D/", arrays, d.params(), "discriminator"); }

void Checkpoint::restore_optimizers(Adam& g, Adam& d) const {
  g.load_state(generator_steps, with_prefix(arrays, "adam_g/"));
  d.load_state(discriminator_steps, with_prefix(arrays, "adam_d/"));
}

}  // namespace novelview
