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

#include <Eigen/Core>
#include <limits>
#include <string>
#include <vector>

#include "novelview/features.hpp"
#include "novelview/tensor.hpp"

namespace novelview {

/// SSIM of two (H, W, C) frames in [-1, 1], mapped to [0, 1] first. Gaussian
/// window 11x11, sigma 1.5, valid windows only, averaged over windows and channels.
double ssim(const Tensor& a, const Tensor& b);
/// PSNR in dB of two frames in [-1, 1] mapped to [0, 1]; +inf when identical.
double psnr(const Tensor& a, const Tensor& b);

struct ClipScore {
  double ssim = 0.0;
  double psnr = 0.0;           // mean over finite frames; +inf if every frame is exact
  int infinite_psnr_frames = 0;
};

/// Frame-averaged scores of two (T, H, W, 3) clips.
ClipScore score_clip(const Tensor& pred, const Tensor& target);

/// Gaussian fit of feature vectors.
struct FeatureDistribution {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::int64_t sample_count = 0;

  /// Mean and unbiased covariance of the rows of `samples` (n x F, n >= 2).
  static FeatureDistribution fit(const Eigen::MatrixXd& samples);
};

/// ||mu_p - mu_q||^2 + Tr(S_p + S_q - 2 (S_p S_q)^(1/2)). Eigenvalues down to
/// -1e-10 * max(1, lambda_max) are treated as zero; more negative ones throw NumericError.
double frechet_distance(const FeatureDistribution& p, const FeatureDistribution& q);

/// Feature rows (B x F) of clips stacked as (B, T, H, W, 3).
Eigen::MatrixXd clip_features(const std::vector<Tensor>& clips, const ClipFeatureExtractor& extractor);
/// Frechet distance between feature fits of real and generated clips (>= 2 each).
double fvd(const std::vector<Tensor>& real, const std::vector<Tensor>& fake, const ClipFeatureExtractor& extractor);

struct MetricSet {
  bool ssim = true;
  bool psnr = true;
  bool fvd = true;
  bool empty() const { return !ssim && !psnr && !fvd; }
};

struct ReportRow {
  std::string input_views;  // "v1+v2+v3"
  std::string query_view;
  double ssim = std::numeric_limits<double>::quiet_NaN();
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double fvd = std::numeric_limits<double>::quiet_NaN();
  int clips = 0;
  int infinite_psnr_frames = 0;
};

/// Per (input views, query view) rows plus an aggregate row (query_view ALL)
/// that averages the rows.
struct MetricsReport {
  std::vector<ReportRow> rows;
  ReportRow aggregate;
  std::string extractor;
  MetricSet metrics;

  /// Header `input_views,query_view,ssim,psnr,fvd,clips,extractor`; metrics not
  /// computed are left empty.
  std::string to_csv() const;
  /// Row keys "inputs->query" in order.
  std::vector<std::string> row_keys() const;
};

/// One scored prediction.
struct ScoredClip {
  std::string input_views;
  std::string query_view;
  Tensor prediction;  // (T, H, W, 3)
  Tensor target;
};

/// Groups predictions by (inputs, query) in first-seen order. FVD needs at
/// least two clips per group and is NaN otherwise.
MetricsReport build_report(const std::vector<ScoredClip>& scored, const MetricSet& metrics,
                           const ClipFeatureExtractor* extractor);

std::string join_view_ids(const std::vector<std::string>& ids);

}  // namespace novelview
