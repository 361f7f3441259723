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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "novelview/checkpoint.hpp"
#include "novelview/dataset.hpp"
#include "novelview/features.hpp"
#include "novelview/metrics.hpp"
#include "novelview/network.hpp"
#include "novelview/optim.hpp"
#include "novelview/train_config.hpp"

namespace novelview {

/// One line of the loss log. Terms that were not computed (zero weight) are NaN.
struct LossRow {
  int iteration = 0;
  double l_r = 0.0;
  double l_p = 0.0;
  double l_adv = 0.0;
  double total = 0.0;
  double discriminator_loss = 0.0;

  static std::string csv_header();
  std::string csv() const;
};

/// Alternating discriminator / generator updates on sampled training examples.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const DatasetIndex& index);
  /// Continues from a checkpoint written by the same configuration.
  Trainer(TrainConfig cfg, const DatasetIndex& index, const Checkpoint& from);

  /// Runs the next iteration. Throws NumericError on a non-finite loss.
  LossRow step();
  int iteration() const { return iteration_; }
  void save(const std::filesystem::path& path) const;

  Generator& generator() { return *generator_; }
  Discriminator& discriminator() { return *discriminator_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  LossRow run_step();

  TrainConfig cfg_;
  const DatasetIndex& index_;
  std::unique_ptr<Generator> generator_;
  std::unique_ptr<Discriminator> discriminator_;
  Adam adam_g_, adam_d_;
  Rng rng_;
  std::unique_ptr<FrameFeatureExtractor> perceptual_;
  int iteration_ = 0;
};

struct TrainResult {
  std::vector<LossRow> rows;  // iterations run in this call
  std::filesystem::path final_checkpoint;
  std::filesystem::path loss_log;
};

/// Trains for cfg.iterations, writing the loss log, checkpoints and the
/// resolved configuration under cfg.out. With `resume`, continues from that
/// checkpoint and keeps earlier log rows up to its iteration.
TrainResult train(const TrainConfig& cfg, const std::filesystem::path& resume = {});

/// Evaluation pairs named by cfg.eval, with panel defaults filled in.
std::vector<TrainingExample> eval_pairs(const TrainConfig& cfg, const DatasetIndex& index);

/// Scores every pair with the generator in `mode`; inputs are fed in their stored order.
MetricsReport evaluate_pairs(const std::vector<TrainingExample>& pairs, const Generator& generator,
                             const MetricSet& metrics, const ClipFeatureExtractor* extractor, AblationMode mode,
                             int batch = 4);

/// Mean clip SSIM of the first input clip against the target.
double copy_baseline_ssim(const std::vector<TrainingExample>& pairs);

enum class AblationKind { kFull, kVdTested, kGrTested, kVdTrained, kGrTrained };
std::string to_string(AblationKind kind);
AblationKind parse_ablation_kind(const std::string& text);
std::vector<AblationKind> all_ablation_kinds();

struct AblationOutcome {
  AblationKind kind = AblationKind::kFull;
  MetricsReport report;
  /// Parameter reads during evaluation, keyed by branch prefix ("gr.", "vd.", ...).
  std::map<std::string, std::uint64_t> reads;
};

/// Tested kinds zero a branch of the trained full model (cfg.full_checkpoint(),
/// which must exist). Trained kinds train the reduced model from scratch under
/// <out>/ablation_<kind>. Full uses the checkpoint when present, else trains.
AblationOutcome run_ablation(const TrainConfig& cfg, AblationKind kind, const DatasetIndex& index);

/// One report per N, inputs are the first N of `ordered_inputs`. N = 1 is fed
/// as n_train copies of the single clip.
std::vector<MetricsReport> vary_input_views(const Generator& generator, const DatasetIndex& index,
                                            const std::vector<std::string>& ordered_inputs,
                                            const std::vector<std::string>& queries, const std::vector<int>& n_list,
                                            int offset, const MetricSet& metrics,
                                            const ClipFeatureExtractor* extractor);

/// True when aggregate SSIM does not decrease with N; logs a warning otherwise.
bool ssim_trend_nondecreasing(const std::vector<int>& n_list, const std::vector<MetricsReport>& reports);

}  // namespace novelview
