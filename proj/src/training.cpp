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

#include "novelview/training.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "novelview/errors.hpp"
#include "novelview/losses.hpp"
#include "novelview/text_util.hpp"

namespace novelview {
namespace {

std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void require_finite(int iteration, const char* what, double v) {
  if (!std::isfinite(v)) {
    throw NumericError("non-finite " + std::string(what) + " (" + cell(v) + ") at iteration " +
                       std::to_string(iteration));
  }
}

std::string checkpoint_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter_%06d.nvc", iteration);
  return buf;
}

void keep_log_prefix(const std::filesystem::path& log, int last_iteration) {
  std::ostringstream kept;
  kept << LossRow::csv_header() << "\n";
  if (std::filesystem::exists(log)) {
    std::istringstream in(read_text_file(log));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      const auto it = try_parse_int(line.substr(0, comma));
      if (it && *it <= last_iteration) kept << line << "\n";
    }
  }
  write_text_file(log, kept.str());
}

const std::vector<std::string> kBranches{"encoder.", "gr.", "vd.", "query.", "decoder."};

}  // namespace

std::string LossRow::csv_header() { return "iteration,L_r,L_p,L_adv,total,discriminator_loss"; }

std::string LossRow::csv() const {
  return std::to_string(iteration) + "," + cell(l_r) + "," + cell(l_p) + "," + cell(l_adv) + "," + cell(total) + "," +
         cell(discriminator_loss);
}

Trainer::Trainer(TrainConfig cfg, const DatasetIndex& index)
    : cfg_(std::move(cfg)), index_(index), adam_g_(cfg_.adam), adam_d_(cfg_.adam) {
  cfg_.validate();
  const ModelConfig model = cfg_.seeded_model();
  if (index_.resolution() != model.clip_res) {
    throw ConfigError("dataset resolution " + std::to_string(index_.resolution()) + " differs from model.clip_res " +
                      std::to_string(model.clip_res));
  }
  if (index_.schema()->name() != model.schema) {
    throw ConfigError("dataset schema '" + index_.schema()->name() + "' differs from model.schema '" + model.schema + "'");
  }
  generator_ = std::make_unique<Generator>(model);
  generator_->set_normalizer(ViewNormalizer::fit(index_.views()));
  discriminator_ = std::make_unique<Discriminator>(model);
  rng_ = Rng::derived(cfg_.seed, 2);
  if (cfg_.loss.lambda_p > 0.0) perceptual_ = make_perceptual_extractor({cfg_.vgg19_weights, cfg_.desk_fallback});
}

Trainer::Trainer(TrainConfig cfg, const DatasetIndex& index, const Checkpoint& from) : Trainer(std::move(cfg), index) {
  if (!(from.model == cfg_.seeded_model())) {
    throw ConfigError("checkpoint model configuration differs from the run configuration");
  }
  generator_ = from.make_generator();
  from.restore(*discriminator_);
  from.restore_optimizers(adam_g_, adam_d_);
  rng_ = Rng::deserialize(from.rng_state);
  iteration_ = static_cast<int>(from.iteration);
}

LossRow Trainer::step() {
  try {
    return run_step();
  } catch (const NumericError& e) {
    const std::string what = e.what();
    if (what.find("at iteration") != std::string::npos) throw;
    throw NumericError(what + " at iteration " + std::to_string(iteration_ + 1));
  }
}

LossRow Trainer::run_step() {
  const int it = iteration_ + 1;
  const LossWeights& w = cfg_.loss;
  std::vector<TrainingExample> batch;
  for (int b = 0; b < cfg_.batch; ++b) batch.push_back(sample_training_example(index_, rng_, cfg_.protocol()));
  Tensor target_t;
  const GeneratorInput input = make_generator_input(batch, &target_t);
  const ag::Var target(target_t);

  const ag::Var pred = generator_->forward(input);
  LossRow row;
  row.iteration = it;
  row.l_p = row.l_adv = row.discriminator_loss = std::numeric_limits<double>::quiet_NaN();

  const bool adversarial = w.lambda_adv > 0.0;
  if (adversarial) {
    discriminator_->params().zero_grad();
    ag::Var d_loss = discriminator_loss((*discriminator_)(target), (*discriminator_)(pred.detach()));
    row.discriminator_loss = d_loss.value()[0];
    require_finite(it, "discriminator loss", row.discriminator_loss);
    d_loss.backward();
    adam_d_.step(discriminator_->params().all());
  }

  generator_->params().zero_grad();
  std::vector<ag::Var> terms;
  const ag::Var l_r = reconstruction_loss(pred, target);
  row.l_r = l_r.value()[0];
  if (w.lambda_r > 0.0) terms.push_back(ag::scale(l_r, static_cast<float>(w.lambda_r)));
  if (w.lambda_p > 0.0) {
    const ag::Var l_p = perceptual_loss(pred, target, *perceptual_);
    row.l_p = l_p.value()[0];
    terms.push_back(ag::scale(l_p, static_cast<float>(w.lambda_p)));
  }
  if (adversarial) {
    const ag::Var l_adv = generator_adversarial_loss((*discriminator_)(pred), cfg_.saturating);
    row.l_adv = l_adv.value()[0];
    terms.push_back(ag::scale(l_adv, static_cast<float>(w.lambda_adv)));
  }
  row.total = total_loss(row.l_r, row.l_p, row.l_adv, w).total;
  require_finite(it, "L_r", row.l_r);
  if (w.lambda_p > 0.0) require_finite(it, "L_p", row.l_p);
  if (adversarial) require_finite(it, "L_adv", row.l_adv);
  require_finite(it, "total loss", row.total);

  ag::Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = ag::add(total, terms[i]);
  total.backward();
  adam_g_.step(generator_->params().all());
  iteration_ = it;
  return row;
}

void Trainer::save(const std::filesystem::path& path) const {
  CheckpointSource s;
  s.generator = generator_.get();
  s.discriminator = discriminator_.get();
  s.generator_optimizer = &adam_g_;
  s.discriminator_optimizer = &adam_d_;
  s.iteration = iteration_;
  s.rng_state = rng_.serialize();
  s.run_config = cfg_.format();
  save_checkpoint(path, s);
}

TrainResult train(const TrainConfig& cfg, const std::filesystem::path& resume) {
  cfg.validate();
  if (cfg.dataset.empty()) throw ConfigError("data.root is not set");
  const DatasetIndex index = load_dataset(cfg.dataset);
  std::filesystem::create_directories(cfg.checkpoint_dir());
  write_text_file(cfg.out / "config.txt", cfg.format());

  std::unique_ptr<Trainer> trainer;
  if (resume.empty()) {
    trainer = std::make_unique<Trainer>(cfg, index);
  } else {
    if (!std::filesystem::is_regular_file(resume)) throw ConfigError("checkpoint '" + resume.string() + "' not found");
    trainer = std::make_unique<Trainer>(cfg, index, load_checkpoint(resume));
  }
  TrainResult result;
  result.loss_log = cfg.loss_log();
  keep_log_prefix(result.loss_log, trainer->iteration());
  std::ofstream log(result.loss_log, std::ios::app);
  if (!log) throw IoError("cannot append to '" + result.loss_log.string() + "'");

  std::vector<TrainingExample> pairs;
  if (cfg.eval_every > 0) pairs = eval_pairs(cfg, index);
  const auto start = std::chrono::steady_clock::now();
  spdlog::info("training {} iterations from iteration {} (seed {}, batch {})", cfg.iterations, trainer->iteration(),
               cfg.seed, cfg.batch);
  while (trainer->iteration() < cfg.iterations) {
    const LossRow row = trainer->step();
    log << row.csv() << "\n";
    log.flush();
    result.rows.push_back(row);
    if (row.iteration % 25 == 0 || row.iteration == 1) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      spdlog::info("iter {} L_r {} total {} ({:.1f}s)", row.iteration, cell(row.l_r), cell(row.total), secs);
    }
    if (cfg.checkpoint_every > 0 && row.iteration % cfg.checkpoint_every == 0) {
      trainer->save(cfg.checkpoint_dir() / checkpoint_name(row.iteration));
    }
    if (cfg.eval_every > 0 && row.iteration % cfg.eval_every == 0) {
      const auto report = evaluate_pairs(pairs, trainer->generator(), MetricSet{true, true, false}, nullptr,
                                         trainer->generator().config().ablation);
      std::filesystem::create_directories(cfg.out / "eval");
      write_text_file(cfg.out / "eval" / ("iter_" + std::to_string(row.iteration) + ".csv"), report.to_csv());
    }
  }
  result.final_checkpoint = cfg.final_checkpoint();
  trainer->save(result.final_checkpoint);
  return result;
}

std::vector<TrainingExample> eval_pairs(const TrainConfig& cfg, const DatasetIndex& index) {
  std::vector<std::string> inputs = cfg.eval.inputs, queries = cfg.eval.queries;
  if (inputs.empty() || queries.empty()) {
    const auto panel = index.groups().front();
    const auto n = static_cast<std::size_t>(cfg.model.n_train);
    if (panel.size() <= n) throw ProtocolError("the first panel has too few cameras for the default eval split");
    std::vector<std::string> di, dq;
    for (std::size_t i = 0; i < panel.size(); ++i) (i < n ? di : dq).push_back(index.camera_id(panel[i]));
    if (inputs.empty()) inputs = di;
    if (queries.empty()) queries = dq;
  }
  return fixed_eval_pairs(index, inputs, queries, cfg.model.clip_frames, cfg.eval.offset);
}

MetricsReport evaluate_pairs(const std::vector<TrainingExample>& pairs, const Generator& generator,
                             const MetricSet& metrics, const ClipFeatureExtractor* extractor, AblationMode mode,
                             int batch) {
  if (pairs.empty()) throw ConfigError("no evaluation pairs");
  if (metrics.empty()) throw ConfigError("no metrics selected");
  ag::NoGradGuard guard;
  std::vector<ScoredClip> scored;
  for (std::size_t first = 0; first < pairs.size(); first += static_cast<std::size_t>(batch)) {
    const std::size_t last = std::min(pairs.size(), first + static_cast<std::size_t>(batch));
    std::vector<const TrainingExample*> chunk;
    for (std::size_t i = first; i < last; ++i) chunk.push_back(&pairs[i]);
    const Tensor pred = generator.forward(make_generator_input(chunk), mode).value();
    for (std::size_t i = first; i < last; ++i) {
      const auto k = static_cast<std::int64_t>(i - first);
      const Shape clip_shape(pred.shape().begin() + 1, pred.shape().end());
      scored.push_back({join_view_ids(pairs[i].input_ids), pairs[i].query_id,
                        pred.slice_outer(k, k + 1).reshaped(clip_shape), pairs[i].target.frames()});
    }
  }
  return build_report(scored, metrics, extractor);
}

double copy_baseline_ssim(const std::vector<TrainingExample>& pairs) {
  if (pairs.empty()) throw ConfigError("no evaluation pairs");
  double acc = 0.0;
  for (const auto& p : pairs) acc += score_clip(p.inputs[0].frames(), p.target.frames()).ssim;
  return acc / static_cast<double>(pairs.size());
}

std::string to_string(AblationKind kind) {
  switch (kind) {
    case AblationKind::kFull: return "full";
    case AblationKind::kVdTested: return "vd_tested";
    case AblationKind::kGrTested: return "gr_tested";
    case AblationKind::kVdTrained: return "vd_trained";
    case AblationKind::kGrTrained: return "gr_trained";
  }
  return "?";
}

AblationKind parse_ablation_kind(const std::string& text) {
  for (auto k : all_ablation_kinds()) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown ablation kind '" + text + "'");
}

std::vector<AblationKind> all_ablation_kinds() {
  return {AblationKind::kVdTested, AblationKind::kGrTested, AblationKind::kVdTrained, AblationKind::kGrTrained,
          AblationKind::kFull};
}

AblationOutcome run_ablation(const TrainConfig& cfg, AblationKind kind, const DatasetIndex& index) {
  cfg.validate();
  AblationOutcome out;
  out.kind = kind;
  const auto full = cfg.full_checkpoint();
  std::unique_ptr<Generator> g;
  AblationMode mode = AblationMode::kFull;
  if (kind == AblationKind::kVdTested || kind == AblationKind::kGrTested) {
    if (!std::filesystem::is_regular_file(full)) {
      throw ConfigError(to_string(kind) + " needs a trained full-model checkpoint; '" + full.string() + "' not found");
    }
    g = load_checkpoint(full).make_generator();
    if (g->config().ablation != AblationMode::kFull) throw ConfigError(full.string() + " is not a full model");
    mode = kind == AblationKind::kVdTested ? AblationMode::kVdOnly : AblationMode::kGrOnly;
  } else if (kind == AblationKind::kFull && std::filesystem::is_regular_file(full)) {
    g = load_checkpoint(full).make_generator();
  } else {
    TrainConfig reduced = cfg;
    reduced.out = cfg.out / ("ablation_" + to_string(kind));
    reduced.eval.checkpoint.clear();
    if (kind == AblationKind::kVdTrained) reduced.model.ablation = AblationMode::kVdOnly;
    if (kind == AblationKind::kGrTrained) reduced.model.ablation = AblationMode::kGrOnly;
    if (kind == AblationKind::kFull) reduced.model.ablation = AblationMode::kFull;
    g = load_checkpoint(train(reduced).final_checkpoint).make_generator();
    mode = reduced.model.ablation;
  }
  std::unique_ptr<ClipFeatureExtractor> extractor;
  if (cfg.eval.metrics.fvd) extractor = make_clip_extractor(cfg.eval.clip_weights);
  const auto pairs = eval_pairs(cfg, index);
  g->params().reset_reads();
  out.report = evaluate_pairs(pairs, *g, cfg.eval.metrics, extractor.get(), mode);
  for (const auto& prefix : kBranches) out.reads[prefix] = 0;
  for (const auto* p : g->params().all()) {
    for (const auto& prefix : kBranches) {
      if (p->name().rfind(prefix, 0) == 0) out.reads[prefix] += p->reads();
    }
  }
  return out;
}

std::vector<MetricsReport> vary_input_views(const Generator& generator, const DatasetIndex& index,
                                            const std::vector<std::string>& ordered_inputs,
                                            const std::vector<std::string>& queries, const std::vector<int>& n_list,
                                            int offset, const MetricSet& metrics,
                                            const ClipFeatureExtractor* extractor) {
  std::vector<MetricsReport> reports;
  const int clip_frames = generator.config().clip_frames;
  for (int n : n_list) {
    if (n < 1 || n > index.num_cameras() - 1) {
      throw ProtocolError("N = " + std::to_string(n) + " needs at least " + std::to_string(n + 1) +
                          " cameras; the dataset has " + std::to_string(index.num_cameras()));
    }
    if (n > static_cast<int>(ordered_inputs.size())) {
      throw ProtocolError("N = " + std::to_string(n) + " exceeds the " + std::to_string(ordered_inputs.size()) +
                          " listed input views");
    }
    const std::vector<std::string> prefix(ordered_inputs.begin(), ordered_inputs.begin() + n);
    auto pairs = fixed_eval_pairs(index, prefix, queries, clip_frames, offset);
    if (n == 1 && generator.config().n_train > 1) {
      for (auto& p : pairs) p.inputs = replicate_single_view(p.inputs[0], generator.config().n_train);
    }
    reports.push_back(evaluate_pairs(pairs, generator, metrics, extractor, generator.config().ablation));
  }
  return reports;
}

bool ssim_trend_nondecreasing(const std::vector<int>& n_list, const std::vector<MetricsReport>& reports) {
  bool ok = true;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].aggregate.ssim < reports[i - 1].aggregate.ssim) {
      spdlog::warn("mean SSIM drops from {:.4f} at N={} to {:.4f} at N={}", reports[i - 1].aggregate.ssim,
                   n_list[i - 1], reports[i].aggregate.ssim, n_list[i]);
      ok = false;
    }
  }
  return ok;
}

}  // namespace novelview
