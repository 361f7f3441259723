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


// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "novelview/checkpoint.hpp"
#include "novelview/dataset.hpp"
#include "novelview/errors.hpp"
#include "novelview/features.hpp"
#include "novelview/losses.hpp"
#include "novelview/metrics.hpp"
#include "novelview/network.hpp"
#include "novelview/synthetic.hpp"
#include "novelview/text_util.hpp"
#include "novelview/training.hpp"
#include "novelview/view_geometry.hpp"
#include "oracles.hpp"

using namespace novelview;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

GeneratorInput random_input(const ModelConfig& cfg, int n, std::int64_t frames, Rng& rng) {
  const std::int64_t d = cfg.view_schema()->dim();
  GeneratorInput in;
  for (int i = 0; i < n; ++i) {
    in.clips.push_back(random_tensor({1, frames, cfg.clip_res, cfg.clip_res, 3}, rng));
    in.views.push_back(random_tensor({1, d}, rng, -2.0, 2.0));
  }
  in.query_view = random_tensor({1, d}, rng, -2.0, 2.0);
  return in;
}

bool has_nonzero(const Tensor& t) {
  for (float v : t.values())
    if (v != 0.0f) return true;
  return false;
}

ModelConfig narrow() {
  ModelConfig c = ModelConfig::desk();
  c.encoder_channels = 16;
  c.tiny_encoder_filters = {8, 8, 16};
  c.gr_filters = {8, 16};
  c.vd_filters = {4, 8};
  c.query_filters = 16;
  c.decoder_filters = {16, 16, 16, 16, 8, 8, 8, 3};
  c.discriminator_filters = {4, 4, 8, 8, 8, 8};
  return c;
}

fs::path fresh_dir(const fs::path& base, const std::string& name) {
  const fs::path d = base / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// The 4-scene x 6-camera overfit set, 16 frames at 56 px.
struct Workspace {
  fs::path root;
  fs::path overfit_data;
};

Verdict shape_grid() {
  ag::NoGradGuard guard;
  const auto t0 = Clock::now();
  int ok = 0, total = 0;
  std::string first_bad;
  for (int res : {56, 112}) {
    ModelConfig cfg = ModelConfig::desk();
    cfg.clip_res = res;
    const Generator g(cfg);
    Rng rng(100 + static_cast<std::uint64_t>(res));
    for (int n : {1, 2, 5}) {
      for (int t : {16, 24, 32, 48}) {
        ++total;
        const Tensor out = g.forward(random_input(cfg, n, t, rng)).value();
        bool good = out.shape() == Shape{1, t, res, res, 3};
        for (float v : out.values()) good = good && v > -1.0f && v < 1.0f;
        if (good) {
          ++ok;
        } else if (first_bad.empty()) {
          first_bad = " first failure N=" + std::to_string(n) + " T=" + std::to_string(t) + " res=" +
                      std::to_string(res);
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {ok == total && secs < 120.0, std::to_string(ok) + "/" + std::to_string(total) +
                                           " shapes (T,res,res,3) inside (-1,1), " + fmt("%.1f s", secs) +
                                           " (limit 120 s)" + first_bad};
}

Verdict weight_sharing() {
  ag::NoGradGuard guard;
  const Generator g(ModelConfig::desk());
  Rng rng(2);
  double worst = 0.0;
  for (int set = 0; set < 20; ++set) {
    const int n = 1 + static_cast<int>(rng.below(5));
    std::vector<ag::Var> clips;
    for (int i = 0; i < n; ++i) clips.emplace_back(random_tensor({1, 16, 56, 56, 3}, rng));
    const auto joint = g.encode(clips);
    for (int i = 0; i < n; ++i) {
      const auto alone = g.encode({clips[static_cast<std::size_t>(i)]});
      worst = std::max<double>(worst, max_abs_diff(joint[static_cast<std::size_t>(i)].value(), alone[0].value()));
    }
  }
  return {worst <= 1e-5, "20 clip sets, max |joint - per-clip| = " + fmt("%.3g", worst) + " (limit 1e-5)"};
}

Verdict view_embedder() {
  Rng rng(3);
  double worst_var = 0.0;
  bool values_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto k = 1 + static_cast<std::int64_t>(rng.below(14));
    std::vector<float> v;
    for (std::int64_t i = 0; i < k; ++i) v.push_back(static_cast<float>(rng.uniform(-100, 100)));
    const auto t = 1 + static_cast<std::int64_t>(rng.below(8));
    const auto h = 1 + static_cast<std::int64_t>(rng.below(14));
    const auto w = 1 + static_cast<std::int64_t>(rng.below(14));
    const Tensor e = embed_view(v, t, h, w);
    if (e.shape() != Shape{t, h, w, k}) return {false, "wrong embedding shape"};
    const std::int64_t cells = t * h * w;
    for (std::int64_t c = 0; c < k; ++c) {
      long double mean = 0.0L, sq = 0.0L;
      for (std::int64_t p = 0; p < cells; ++p) mean += e[p * k + c];
      mean /= static_cast<long double>(cells);
      for (std::int64_t p = 0; p < cells; ++p) sq += (e[p * k + c] - mean) * (e[p * k + c] - mean);
      worst_var = std::max(worst_var, static_cast<double>(sq / static_cast<long double>(cells)));
      values_ok = values_ok && e[c] == v[static_cast<std::size_t>(c)];
    }
  }
  return {worst_var == 0.0 && values_ok,
          "100 random vectors/grids, max variance along (T,H,W) = " + fmt("%g", worst_var) +
              (values_ok ? ", channels equal the vector" : ", channel values differ from the vector")};
}

Verdict gradient_coverage(const Workspace& ws) {
  const DatasetIndex index = load_dataset(ws.overfit_data);
  TrainConfig cfg;
  cfg.dataset = ws.overfit_data;
  cfg.batch = 2;
  cfg.out = fresh_dir(ws.root, "coverage");
  cfg.seed = 4;
  Trainer trainer(cfg, index);
  std::set<const Parameter*> touched;
  for (int b = 0; b < 5; ++b) {
    trainer.step();
    for (const auto* p : trainer.generator().params().all()) {
      if (!p->var().grad().empty() && has_nonzero(p->var().grad())) touched.insert(p);
    }
  }
  const std::size_t total = trainer.generator().params().all().size();

  // Disabled-branch traffic: a full model run in each reduced mode on the same kind of batches.
  Generator g(cfg.seeded_model());
  Rng rng = Rng::derived(cfg.seed, 9);
  std::size_t leaks = 0;
  std::string leak_name;
  for (AblationMode mode : {AblationMode::kGrOnly, AblationMode::kVdOnly}) {
    const std::vector<std::string> disabled =
        mode == AblationMode::kGrOnly ? std::vector<std::string>{"vd."} : std::vector<std::string>{"gr.", "query."};
    for (int b = 0; b < 5; ++b) {
      std::vector<TrainingExample> batch;
      for (int i = 0; i < 2; ++i) batch.push_back(sample_training_example(index, rng, cfg.protocol()));
      Tensor target;
      const GeneratorInput in = make_generator_input(batch, &target);
      g.params().zero_grad();
      reconstruction_loss(g.forward(in, mode), ag::Var(target)).backward();
      for (const auto& prefix : disabled) {
        for (auto* p : g.params().with_prefix(prefix)) {
          if (!p->var().grad().empty() && has_nonzero(p->var().grad())) {
            ++leaks;
            if (leak_name.empty()) leak_name = p->name();
          }
        }
      }
    }
  }
  return {touched.size() == total && leaks == 0,
          std::to_string(touched.size()) + "/" + std::to_string(total) +
              " generator parameters with nonzero gradient over 5 training steps; disabled-branch gradients in "
              "gr_only/vd_only: " +
              std::to_string(leaks) + (leak_name.empty() ? "" : " (" + leak_name + ")")};
}

Verdict loss_anchors() {
  const LossWeights w{1.0, 0.01, 0.01};
  Rng rng(5);
  double worst = std::fabs(total_loss(1.0, 1.0, 1.0, w).total - 1.02);
  for (int i = 0; i < 1000; ++i) {
    const double r = rng.uniform(0, 10), p = rng.uniform(0, 10), a = rng.uniform(0, 10);
    const long double hand = 1.0L * r + 0.01L * p + 0.01L * a;
    worst = std::max(worst, static_cast<double>(std::fabs(total_loss(r, p, a, w).total - hand)));
  }
  const std::vector<double> half{0.5};
  const double d = adversarial_losses(half, half).discriminator;
  const double d_err = std::fabs(d - 2.0 * std::log(2.0));

  // Loss-ablation rows: L2 | Lp+Ladv | L2+Lp | L2+Ladv | L2+Lp+Ladv.
  const std::vector<std::array<bool, 3>> rows{
      {true, false, false}, {false, true, true}, {true, true, false}, {true, false, true}, {true, true, true}};
  const auto names = LossWeights::preset_names();
  bool presets_ok = names.size() == rows.size();
  for (std::size_t i = 0; presets_ok && i < rows.size(); ++i) {
    const LossWeights p = LossWeights::preset(names[i]);
    p.validate();
    presets_ok = (p.lambda_r > 0) == rows[i][0] && (p.lambda_p > 0) == rows[i][1] && (p.lambda_adv > 0) == rows[i][2];
    const LossWeights zeroed{rows[i][0] ? w.lambda_r : 0.0, rows[i][1] ? w.lambda_p : 0.0,
                             rows[i][2] ? w.lambda_adv : 0.0};
    presets_ok = presets_ok && p.lambda_r == zeroed.lambda_r && p.lambda_p == zeroed.lambda_p &&
                 p.lambda_adv == zeroed.lambda_adv;
  }
  return {worst <= 1e-12 && d_err <= 1e-12 && presets_ok,
          "weighted-sum error " + fmt("%.2g", worst) + ", D loss at 0.5 = " + fmt("%.15f", d) + " (2 ln 2 error " +
              fmt("%.2g", d_err) + "), " + std::to_string(names.size()) + " loss-ablation presets" +
              (presets_ok ? " match" : " do not match")};
}

Verdict metric_oracles() {
  Rng rng(6);
  double identity_err = 0.0, ssim_err = 0.0, psnr_err = 0.0;
  for (int i = 0; i < 6; ++i) {
    const std::int64_t h = 16 + static_cast<std::int64_t>(rng.below(48)), w = 16 + static_cast<std::int64_t>(rng.below(48));
    const Tensor a = random_tensor({h, w, 3}, rng);
    Tensor b = a;
    for (auto& v : b.values()) v = std::clamp(v + static_cast<float>(rng.uniform(-0.5, 0.5)), -1.0f, 1.0f);
    const Tensor c = random_tensor({h, w, 3}, rng);
    identity_err = std::max(identity_err, std::fabs(ssim(a, a) - 1.0));
    ssim_err = std::max({ssim_err, std::fabs(ssim(a, b) - nvtest::oracle_ssim(a, b)),
                         std::fabs(ssim(a, c) - nvtest::oracle_ssim(a, c))});
    long double mse = 0.0L;
    for (std::int64_t k = 0; k < a.numel(); ++k) {
      const long double diff = (static_cast<long double>(a[k]) - b[k]) / 2.0L;
      mse += diff * diff;
    }
    mse /= static_cast<long double>(a.numel());
    psnr_err = std::max(psnr_err, std::fabs(psnr(a, b) - static_cast<double>(10.0L * std::log10(1.0L / mse))));
  }

  FeatureDistribution p;
  p.mean = Eigen::VectorXd::Random(8);
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(8, 8);
  p.covariance = m * m.transpose();
  p.sample_count = 100;
  const double same = std::fabs(frechet_distance(p, p));

  double one_d = 0.0;
  for (int i = 0; i < 20; ++i) {
    FeatureDistribution x, y;
    const double m1 = rng.uniform(-3, 3), m2 = rng.uniform(-3, 3), s1 = rng.uniform(0.1, 3), s2 = rng.uniform(0.1, 3);
    x.mean = Eigen::VectorXd::Constant(1, m1);
    y.mean = Eigen::VectorXd::Constant(1, m2);
    x.covariance = Eigen::MatrixXd::Constant(1, 1, s1 * s1);
    y.covariance = Eigen::MatrixXd::Constant(1, 1, s2 * s2);
    x.sample_count = y.sample_count = 100;
    one_d = std::max(one_d, std::fabs(frechet_distance(x, y) - ((m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2))));
  }
  const bool pass = identity_err <= 1e-9 && ssim_err <= 1e-7 && psnr_err <= 1e-9 && same <= 1e-6 && one_d <= 1e-6;
  return {pass, "SSIM identity error " + fmt("%.2g", identity_err) + ", SSIM vs brute force " + fmt("%.2g", ssim_err) +
                    ", PSNR vs closed form " + fmt("%.2g", psnr_err) + ", Frechet same moments " + fmt("%.2g", same) +
                    ", 1-D closed form " + fmt("%.2g", one_d)};
}

std::vector<TrainingExample> all_query_pairs(const DatasetIndex& index, int n_inputs, int frames) {
  std::vector<TrainingExample> pairs;
  for (int q = 0; q < index.num_cameras(); ++q) {
    std::vector<std::string> inputs;
    for (int c = 0; c < index.num_cameras() && static_cast<int>(inputs.size()) < n_inputs; ++c) {
      if (c != q) inputs.push_back(index.camera_id(c));
    }
    for (auto& p : fixed_eval_pairs(index, inputs, {index.camera_id(q)}, frames)) pairs.push_back(std::move(p));
  }
  return pairs;
}

Verdict overfit(const Workspace& ws) {
  const auto t0 = Clock::now();
  TrainConfig cfg;
  cfg.dataset = ws.overfit_data;
  cfg.loss = LossWeights::preset("l2");
  cfg.batch = 2;
  cfg.iterations = 500;
  cfg.checkpoint_every = 0;
  cfg.seed = 7;
  cfg.out = fresh_dir(ws.root, "overfit");
  const TrainResult r = train(cfg);
  double early = 0.0, late = 0.0;
  int n_early = 0, n_late = 0;
  for (const auto& row : r.rows) {
    if (row.iteration <= 10) early += row.l_r, ++n_early;
    if (row.iteration >= 400) late += row.l_r, ++n_late;
  }
  early /= n_early;
  late /= n_late;
  const double ratio = late / early;

  const DatasetIndex index = load_dataset(ws.overfit_data);
  const auto g = load_checkpoint(r.final_checkpoint).make_generator();
  const auto pairs = all_query_pairs(index, g->config().n_train, g->config().clip_frames);
  const double model_ssim = evaluate_pairs(pairs, *g, MetricSet{true, false, false}, nullptr, AblationMode::kFull)
                                .aggregate.ssim;
  const double copy_ssim = copy_baseline_ssim(pairs);
  const double secs = seconds_since(t0);
  return {ratio <= 0.5 && model_ssim > copy_ssim && secs <= 900.0,
          "l2 preset, L_r iters 1-10 " + fmt("%.5f", early) + ", iters 400-500 " + fmt("%.5f", late) + " (ratio " +
              fmt("%.3f", ratio) + ", limit 0.5); training-set SSIM " + fmt("%.4f", model_ssim) +
              " vs copy-input " + fmt("%.4f", copy_ssim) + " over " + std::to_string(pairs.size()) + " pairs; " +
              fmt("%.0f s", secs) + " on " + std::to_string(std::thread::hardware_concurrency()) +
              " core(s) (limit 900 s)"};
}

TrainConfig small_config(const Workspace& ws, const std::string& name) {
  TrainConfig c;
  c.dataset = ws.overfit_data;
  c.model = narrow();
  c.model.clip_frames = 8;
  c.model.n_train = 3;
  c.batch = 2;
  c.iterations = 6;
  c.checkpoint_every = 0;
  c.out = fresh_dir(ws.root, name);
  return c;
}

Verdict ablation_machinery(const Workspace& ws) {
  TrainConfig cfg = small_config(ws, "ablation");
  cfg.eval.metrics = MetricSet{true, true, false};
  train(cfg);
  const DatasetIndex index = load_dataset(ws.overfit_data);
  std::vector<std::string> keys;
  bool same_keys = true;
  std::uint64_t gr_tested_vd = 0, gr_tested_gr = 0, vd_tested_gr = 0;
  for (AblationKind kind : all_ablation_kinds()) {
    const AblationOutcome o = run_ablation(cfg, kind, index);
    if (keys.empty()) keys = o.report.row_keys();
    same_keys = same_keys && o.report.row_keys() == keys;
    if (kind == AblationKind::kGrTested) {
      gr_tested_vd = o.reads.at("vd.");
      gr_tested_gr = o.reads.at("gr.");
    }
    if (kind == AblationKind::kVdTested) vd_tested_gr = o.reads.at("gr.") + o.reads.at("query.");
  }
  return {same_keys && !keys.empty() && gr_tested_vd == 0 && gr_tested_gr > 0 && vd_tested_gr == 0,
          std::to_string(all_ablation_kinds().size()) + " kinds, " + std::to_string(keys.size()) + " row keys" +
              (same_keys ? " identical" : " differ") + "; gr_tested reads vd.* " + std::to_string(gr_tested_vd) +
              " times (gr.* " + std::to_string(gr_tested_gr) + "); vd_tested reads gr.*/query.* " +
              std::to_string(vd_tested_gr) + " times"};
}

Verdict reproducibility(const Workspace& ws) {
  const DatasetIndex index = load_dataset(ws.overfit_data);
  std::vector<std::string> logs, reports;
  for (const char* name : {"repro_a", "repro_b"}) {
    TrainConfig cfg = small_config(ws, name);
    cfg.iterations = 8;
    cfg.seed = 9;
    const TrainResult r = train(cfg);
    logs.push_back(read_text_file(r.loss_log));
    const auto g = load_checkpoint(r.final_checkpoint).make_generator();
    const auto extractor = make_clip_extractor("");
    const auto report =
        evaluate_pairs(eval_pairs(cfg, index), *g, MetricSet{true, true, true}, extractor.get(), AblationMode::kFull);
    write_text_file(cfg.out / "report.csv", report.to_csv());
    reports.push_back(read_text_file(cfg.out / "report.csv"));
  }
  return {logs[0] == logs[1] && reports[0] == reports[1],
          std::string("loss logs ") + (logs[0] == logs[1] ? "byte-identical" : "differ") + " (" +
              std::to_string(logs[0].size()) + " bytes), metric reports " +
              (reports[0] == reports[1] ? "byte-identical" : "differ") + " (" + std::to_string(reports[0].size()) +
              " bytes)"};
}

Verdict table_shape(const Workspace& ws) {
  const fs::path data = fresh_dir(ws.root, "panel24");
  synth::generate_dataset(synth::CameraRig::ring(ViewSchema::panoptic14(), 24), 2, 16, 56, data, 21);
  const DatasetIndex index = load_dataset(data);
  std::vector<std::string> inputs, queries;
  for (int v = 1; v <= 24; ++v) (v <= 5 ? inputs : queries).push_back("v" + std::to_string(v));
  const auto pairs = fixed_eval_pairs(index, inputs, queries, 16);
  const Generator g(ModelConfig::desk());
  const auto extractor = make_clip_extractor("");
  const MetricsReport report = evaluate_pairs(pairs, g, MetricSet{}, extractor.get(), AblationMode::kFull);
  const std::string csv = report.to_csv();
  const auto lines = std::count(csv.begin(), csv.end(), '\n');
  bool order_ok = report.rows.size() == queries.size();
  for (std::size_t i = 0; order_ok && i < queries.size(); ++i) {
    order_ok = report.rows[i].query_view == queries[i] && report.rows[i].input_views == "v1+v2+v3+v4+v5";
  }
  return {report.rows.size() == 19 && report.aggregate.query_view == "ALL" && lines == 21 && order_ok,
          std::to_string(report.rows.size()) + " rows (v6..v24) + aggregate '" + report.aggregate.query_view +
              "', " + std::to_string(lines) + " CSV lines with header"};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const fs::path root = fs::temp_directory_path() / "novelview_acceptance";
  fs::remove_all(root);
  Workspace ws{root, root / "overfit_data"};
  synth::generate_dataset(synth::CameraRig::ring(ViewSchema::panoptic14(), 6), 4, 16, 56, ws.overfit_data, 1);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"shape grid", shape_grid},
      {"weight sharing", weight_sharing},
      {"view embedder broadcast", view_embedder},
      {"gradient coverage", [&] { return gradient_coverage(ws); }},
      {"loss anchors", loss_anchors},
      {"metric oracles", metric_oracles},
      {"overfit descent", [&] { return overfit(ws); }},
      {"ablation machinery", [&] { return ablation_machinery(ws); }},
      {"reproducibility", [&] { return reproducibility(ws); }},
      {"table shape", [&] { return table_shape(ws); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << "criterion " << i + 1 << " " << (v.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << v.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
