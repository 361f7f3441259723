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


#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "novelview/checkpoint.hpp"
#include "novelview/dataset.hpp"
#include "novelview/errors.hpp"
#include "novelview/features.hpp"
#include "novelview/metrics.hpp"
#include "novelview/synthetic.hpp"
#include "novelview/text_util.hpp"
#include "novelview/train_config.hpp"
#include "novelview/training.hpp"

namespace fs = std::filesystem;

namespace novelview::cli {
namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  std::string log_level = "info";
};

TrainConfig resolve_config(const GlobalOptions& g) {
  TrainConfig cfg = g.config.empty() ? TrainConfig{} : TrainConfig::load(g.config);
  for (const auto& kv : g.overrides) {
    const auto pair = split_key_value(kv);
    if (!pair) throw ConfigError("empty --set value");
    cfg.set(pair->first, pair->second);
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.out = g.out;
  cfg.validate();
  return cfg;
}

DatasetIndex open_dataset(const TrainConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("data.root is not set");
  return load_dataset(cfg.dataset);
}

std::unique_ptr<Generator> load_generator(TrainConfig& cfg) {
  const fs::path path = cfg.full_checkpoint();
  if (!fs::is_regular_file(path)) throw ConfigError("checkpoint '" + path.string() + "' not found");
  auto g = load_checkpoint(path).make_generator();
  cfg.model = g->config();
  return g;
}

std::unique_ptr<ClipFeatureExtractor> extractor_for(const TrainConfig& cfg) {
  return cfg.eval.metrics.fvd ? make_clip_extractor(cfg.eval.clip_weights) : nullptr;
}

void save_report(const fs::path& path, const MetricsReport& report) {
  fs::create_directories(path.parent_path());
  write_text_file(path, report.to_csv());
}

bool has_png(const fs::path& dir) {
  if (!fs::is_directory(dir)) return false;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") return true;
  }
  return false;
}

int count_png(const fs::path& dir) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file() && e.path().extension() == ".png";
  return n;
}

// Name -> frames directory. A directory holding PNGs is one clip; otherwise
// every subdirectory with PNGs (directly or under frames/) is a clip.
std::vector<std::pair<std::string, fs::path>> find_clips(const fs::path& root) {
  if (!fs::is_directory(root)) throw ConfigError("'" + root.string() + "' is not a directory");
  if (has_png(root)) return {{root.filename().string(), root}};
  std::vector<std::pair<std::string, fs::path>> clips;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_directory() || !has_png(e.path())) continue;
    fs::path rel = fs::relative(e.path(), root);
    if (rel.filename() == "frames" && rel.has_parent_path()) rel = rel.parent_path();
    clips.emplace_back(rel.generic_string(), e.path());
  }
  if (clips.empty()) throw ConfigError("no PNG clips under '" + root.string() + "'");
  std::sort(clips.begin(), clips.end());
  return clips;
}

Tensor read_clip(const fs::path& dir) { return read_clip_frames(dir, 0, count_png(dir)); }

std::string summary_header() { return "ssim,psnr,fvd"; }

std::string summary(const MetricsReport& r) {
  const auto& a = r.aggregate;
  return (r.metrics.ssim ? format_metric(a.ssim) : "") + "," + (r.metrics.psnr ? format_metric(a.psnr) : "") + "," +
         (r.metrics.fvd ? format_metric(a.fvd) : "");
}

int cmd_synthgen(const GlobalOptions& g, const std::string& schema, int scenes, int cameras, int panels, int frames,
                 int res, double max_pan, std::ostream& out) {
  if (g.out.empty()) throw ConfigError("synthgen needs --out");
  if (scenes < 1 || cameras < 1 || panels < 1 || frames < 1) throw ConfigError("counts must be positive");
  if (!synth::supported_resolution(res)) throw ConfigError("unsupported resolution " + std::to_string(res));
  const auto rig = synth::CameraRig::ring(ViewSchema::builtin(schema), cameras, panels, max_pan);
  synth::generate_dataset(rig, scenes, frames, res, g.out, g.seed.value_or(1));
  out << (fs::path(g.out) / "manifest.txt").string() << "\n";
  return 0;
}

int cmd_train(const GlobalOptions& g, const std::string& resume, std::ostream& out) {
  const TrainConfig cfg = resolve_config(g);
  const TrainResult r = train(cfg, resume);
  out << r.final_checkpoint.string() << "\n";
  return 0;
}

int cmd_eval(const GlobalOptions& g, std::ostream& out) {
  TrainConfig cfg = resolve_config(g);
  const auto generator = load_generator(cfg);
  const DatasetIndex index = open_dataset(cfg);
  const auto pairs = eval_pairs(cfg, index);
  const auto extractor = extractor_for(cfg);
  const MetricsReport report =
      evaluate_pairs(pairs, *generator, cfg.eval.metrics, extractor.get(), generator->config().ablation);
  spdlog::info("copy-input baseline SSIM {:.6f}", copy_baseline_ssim(pairs));
  save_report(cfg.out / "eval" / "report.csv", report);
  out << report.to_csv();
  return 0;
}

int cmd_ablate(const GlobalOptions& g, const std::string& kinds_text, std::ostream& out) {
  const TrainConfig cfg = resolve_config(g);
  std::vector<AblationKind> kinds;
  for (const auto& name : split(kinds_text, ',')) {
    const std::string k = trim(name);
    if (k == "all") {
      const auto all = all_ablation_kinds();
      kinds.insert(kinds.end(), all.begin(), all.end());
    } else {
      kinds.push_back(parse_ablation_kind(k));
    }
  }
  const bool needs_checkpoint = std::any_of(kinds.begin(), kinds.end(), [](AblationKind k) {
    return k == AblationKind::kVdTested || k == AblationKind::kGrTested;
  });
  if (needs_checkpoint && !fs::is_regular_file(cfg.full_checkpoint())) {
    throw ConfigError("tested ablations need a trained full-model checkpoint; '" + cfg.full_checkpoint().string() +
                      "' not found");
  }
  const DatasetIndex index = open_dataset(cfg);
  out << "kind," << summary_header() << ",gr_reads,vd_reads\n";
  for (AblationKind kind : kinds) {
    const AblationOutcome o = run_ablation(cfg, kind, index);
    save_report(cfg.out / "ablation" / (to_string(kind) + ".csv"), o.report);
    out << to_string(kind) << "," << summary(o.report) << "," << o.reads.at("gr.") << "," << o.reads.at("vd.")
        << "\n";
  }
  return 0;
}

int cmd_vary_views(const GlobalOptions& g, const std::vector<int>& n_list, std::ostream& out) {
  TrainConfig cfg = resolve_config(g);
  if (n_list.empty()) throw ConfigError("--n is empty");
  const auto generator = load_generator(cfg);
  const DatasetIndex index = open_dataset(cfg);
  const int max_n = *std::max_element(n_list.begin(), n_list.end());
  std::vector<std::string> inputs = cfg.eval.inputs, queries = cfg.eval.queries;
  if (inputs.empty() || queries.empty()) {
    const auto panel = index.groups().front();
    if (static_cast<int>(panel.size()) <= max_n) {
      throw ProtocolError("the first panel has " + std::to_string(panel.size()) + " cameras; N = " +
                          std::to_string(max_n) + " leaves no query view");
    }
    std::vector<std::string> di, dq;
    for (std::size_t i = 0; i < panel.size(); ++i) {
      (static_cast<int>(i) < max_n ? di : dq).push_back(index.camera_id(panel[i]));
    }
    if (inputs.empty()) inputs = di;
    if (queries.empty()) queries = dq;
  }
  const auto extractor = extractor_for(cfg);
  const auto reports = vary_input_views(*generator, index, inputs, queries, n_list, cfg.eval.offset,
                                        cfg.eval.metrics, extractor.get());
  ssim_trend_nondecreasing(n_list, reports);
  out << "n," << summary_header() << "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    save_report(cfg.out / "vary_views" / ("n" + std::to_string(n_list[i]) + ".csv"), reports[i]);
    out << n_list[i] << "," << summary(reports[i]) << "\n";
  }
  return 0;
}

int cmd_metrics(const std::string& pred_dir, const std::string& gt_dir, const std::string& metric_names,
                const std::string& clip_weights, std::ostream& out) {
  const MetricSet metrics = parse_metric_set(metric_names);
  if (metrics.empty()) throw ConfigError("--metrics selects nothing");
  const auto gt = find_clips(gt_dir);
  const auto pred = find_clips(pred_dir);
  std::vector<ScoredClip> scored;
  if (gt.size() == 1 && pred.size() == 1) {
    scored.push_back({"-", gt[0].first, read_clip(pred[0].second), read_clip(gt[0].second)});
  } else {
    for (const auto& [name, dir] : gt) {
      const auto it = std::find_if(pred.begin(), pred.end(), [&](const auto& p) { return p.first == name; });
      if (it == pred.end()) throw ConfigError("prediction for clip '" + name + "' missing under '" + pred_dir + "'");
      scored.push_back({"-", name, read_clip(it->second), read_clip(dir)});
    }
    if (pred.size() != gt.size()) throw ConfigError("'" + pred_dir + "' holds clips with no ground truth");
  }
  const auto extractor = metrics.fvd ? make_clip_extractor(clip_weights) : nullptr;
  MetricsReport report = build_report(scored, metrics, extractor.get());
  if (metrics.fvd && scored.size() >= 2) {
    std::vector<Tensor> real, fake;
    for (const auto& s : scored) {
      real.push_back(s.target);
      fake.push_back(s.prediction);
    }
    report.aggregate.fvd = fvd(real, fake, *extractor);
  }
  out << report.to_csv();
  return 0;
}

}  // namespace

void log_to_stderr() {
  auto logger = spdlog::get("novelview");
  if (!logger) logger = spdlog::stderr_color_mt("novelview");
  spdlog::set_default_logger(logger);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view video synthesis: data generation, training and evaluation", "novelview"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration file (section.key = value)");
  app.add_option("--seed", g.seed, "Run seed; synthgen base scene seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.overrides, "Override one configuration key, key=value")->take_all();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");

  auto* synthgen = app.add_subcommand("synthgen", "Render a synthetic multi-camera dataset");
  std::string schema = "panoptic14";
  int scenes = 4, cameras = 6, panels = 1, frames = 16, res = 56;
  double max_pan = 45.0;
  synthgen->add_option("--schema", schema, "View schema: panoptic14 or ntu5")->capture_default_str();
  synthgen->add_option("--scenes", scenes)->capture_default_str();
  synthgen->add_option("--cameras", cameras, "Cameras per panel")->capture_default_str();
  synthgen->add_option("--panels", panels)->capture_default_str();
  synthgen->add_option("--frames", frames)->capture_default_str();
  synthgen->add_option("--res", res)->capture_default_str();
  synthgen->add_option("--max-pan", max_pan, "Pan range half-width in degrees")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  std::string resume;
  train_cmd->add_option("--resume", resume, "Continue from this checkpoint");

  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on the evaluation pairs");

  auto* ablate = app.add_subcommand("ablate", "Run branch ablations");
  std::string kinds = "all";
  ablate->add_option("--kind", kinds, "vd_tested, gr_tested, vd_trained, gr_trained, full or all")
      ->capture_default_str();

  auto* vary = app.add_subcommand("vary-views", "Score a checkpoint with 1..N input views");
  std::vector<int> n_list{1, 2, 3, 4, 5};
  vary->add_option("--n", n_list, "Input view counts")->delimiter(',');

  auto* metrics_cmd = app.add_subcommand("metrics", "Score predicted clips against ground truth");
  std::string pred_dir, gt_dir, metric_names = "ssim,psnr", clip_weights;
  metrics_cmd->add_option("--pred", pred_dir, "Predicted clip directory")->required();
  metrics_cmd->add_option("--gt", gt_dir, "Ground-truth clip directory")->required();
  metrics_cmd->add_option("--metrics", metric_names, "Comma list of ssim, psnr, fvd")->capture_default_str();
  metrics_cmd->add_option("--clip-weights", clip_weights, "Pretrained video network archive for FVD");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << app.help();
    return 2;
  }

  try {
    const auto level = spdlog::level::from_str(g.log_level);
    if (level == spdlog::level::off && g.log_level != "off") throw ConfigError("unknown log level '" + g.log_level + "'");
    spdlog::set_level(level);
    if (*synthgen) return cmd_synthgen(g, schema, scenes, cameras, panels, frames, res, max_pan, out);
    if (*train_cmd) return cmd_train(g, resume, out);
    if (*eval_cmd) return cmd_eval(g, out);
    if (*ablate) return cmd_ablate(g, kinds, out);
    if (*vary) return cmd_vary_views(g, n_list, out);
    if (*metrics_cmd) return cmd_metrics(pred_dir, gt_dir, metric_names, clip_weights, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const ProtocolError& e) {
    err << "protocol error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace novelview::cli
