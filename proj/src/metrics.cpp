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

#include "novelview/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "novelview/errors.hpp"
#include "novelview/text_util.hpp"

namespace novelview {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    g[static_cast<std::size_t>(i)] = std::exp(-(x * x) / (2.0 * kSigma * kSigma));
    sum += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Valid-mode separable Gaussian filter of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& in, int h, int w) {
  static const auto g = gaussian_taps();
  const int oh = h - kWindow + 1, ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

void check_frames(const Tensor& a, const Tensor& b, const char* who) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(who) + " shapes differ: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  if (a.rank() != 3) throw ShapeError(std::string(who) + " expects (H, W, C) frames, got " + to_string(a.shape()));
}

double mean_finite(const std::vector<double>& v) {
  double acc = 0.0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      acc += x;
      ++n;
    }
  return n ? acc / n : std::numeric_limits<double>::quiet_NaN();
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, const char* what) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError(std::string("eigen decomposition failed for ") + what);
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = -1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < floor) throw NumericError(std::string(what) + " is not positive semi-definite");
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  check_frames(a, b, "ssim");
  const int h = static_cast<int>(a.dim(0)), w = static_cast<int>(a.dim(1)), c = static_cast<int>(a.dim(2));
  if (h < kWindow || w < kWindow) throw ShapeError("ssim needs frames of at least 11x11");
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  double total = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (std::size_t p = 0; p < plane; ++p) {
      x[p] = (static_cast<double>(a[static_cast<std::int64_t>(p) * c + ch]) + 1.0) * 0.5;
      y[p] = (static_cast<double>(b[static_cast<std::int64_t>(p) * c + ch]) + 1.0) * 0.5;
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = filter_valid(x, h, w), my = filter_valid(y, h, w);
    const auto sxx = filter_valid(xx, h, w), syy = filter_valid(yy, h, w), sxy = filter_valid(xy, h, w);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
      acc += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / c;
}

double psnr(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("psnr shapes differ");
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = (static_cast<double>(a[i]) - static_cast<double>(b[i])) * 0.5;
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

ClipScore score_clip(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape() || pred.rank() != 4) throw ShapeError("score_clip expects equal (T, H, W, 3) clips");
  ClipScore s;
  std::vector<double> ps;
  double ss = 0.0;
  for (std::int64_t t = 0; t < pred.dim(0); ++t) {
    const Tensor a = pred.slice_outer(t, t + 1).reshaped({pred.dim(1), pred.dim(2), pred.dim(3)});
    const Tensor b = target.slice_outer(t, t + 1).reshaped({pred.dim(1), pred.dim(2), pred.dim(3)});
    ss += ssim(a, b);
    const double p = psnr(a, b);
    if (std::isinf(p)) ++s.infinite_psnr_frames;
    ps.push_back(p);
  }
  s.ssim = ss / static_cast<double>(pred.dim(0));
  s.psnr = s.infinite_psnr_frames == static_cast<int>(ps.size()) ? std::numeric_limits<double>::infinity() : mean_finite(ps);
  return s;
}

FeatureDistribution FeatureDistribution::fit(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) throw NumericError("a feature distribution needs at least two samples");
  FeatureDistribution d;
  d.sample_count = samples.rows();
  d.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centred = samples.rowwise() - d.mean.transpose();
  d.covariance = (centred.transpose() * centred) / static_cast<double>(samples.rows() - 1);
  return d;
}

double frechet_distance(const FeatureDistribution& p, const FeatureDistribution& q) {
  if (p.mean.size() != q.mean.size() || p.covariance.rows() != q.covariance.rows()) {
    throw ShapeError("feature dimensions differ in the Frechet distance");
  }
  const Eigen::MatrixXd a = symmetric_sqrt(p.covariance, "first covariance");
  const Eigen::MatrixXd m = a * q.covariance * a;
  const Eigen::MatrixXd root = symmetric_sqrt(m, "covariance product");
  return (p.mean - q.mean).squaredNorm() + p.covariance.trace() + q.covariance.trace() - 2.0 * root.trace();
}

Eigen::MatrixXd clip_features(const std::vector<Tensor>& clips, const ClipFeatureExtractor& extractor) {
  ag::NoGradGuard guard;
  Eigen::MatrixXd rows;
  constexpr std::size_t kBatch = 8;
  for (std::size_t first = 0; first < clips.size(); first += kBatch) {
    const std::size_t last = std::min(clips.size(), first + kBatch);
    const Tensor batch = stack(std::span<const Tensor>(clips.data() + first, last - first));
    const Tensor f = extractor(ag::Var(batch)).value();
    if (rows.size() == 0) rows.resize(static_cast<Eigen::Index>(clips.size()), f.dim(1));
    for (std::int64_t i = 0; i < f.dim(0); ++i)
      for (std::int64_t k = 0; k < f.dim(1); ++k) rows(static_cast<Eigen::Index>(first) + i, k) = f[i * f.dim(1) + k];
  }
  return rows;
}

double fvd(const std::vector<Tensor>& real, const std::vector<Tensor>& fake, const ClipFeatureExtractor& extractor) {
  if (real.size() < 2 || fake.size() < 2) throw NumericError("FVD needs at least two clips on each side");
  return frechet_distance(FeatureDistribution::fit(clip_features(real, extractor)),
                          FeatureDistribution::fit(clip_features(fake, extractor)));
}

std::string join_view_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "+" : "") + ids[i];
  return s;
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "input_views,query_view,ssim,psnr,fvd,clips,extractor\n";
  auto line = [&](const ReportRow& r) {
    os << r.input_views << "," << r.query_view << "," << (metrics.ssim ? format_metric(r.ssim) : "") << ","
       << (metrics.psnr ? format_metric(r.psnr) : "") << "," << (metrics.fvd ? format_metric(r.fvd) : "") << ","
       << r.clips << "," << extractor << "\n";
  };
  for (const auto& r : rows) line(r);
  line(aggregate);
  return os.str();
}

std::vector<std::string> MetricsReport::row_keys() const {
  std::vector<std::string> keys;
  for (const auto& r : rows) keys.push_back(r.input_views + "->" + r.query_view);
  return keys;
}

MetricsReport build_report(const std::vector<ScoredClip>& scored, const MetricSet& metrics,
                           const ClipFeatureExtractor* extractor) {
  if (metrics.empty()) throw ConfigError("no metrics selected");
  if (scored.empty()) throw ConfigError("nothing to evaluate");
  if (metrics.fvd && !extractor) throw ConfigError("FVD requested without a feature extractor");
  MetricsReport report;
  report.metrics = metrics;
  report.extractor = metrics.fvd ? extractor->name() : "none";

  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const ScoredClip*>> groups;
  for (const auto& s : scored) {
    const auto key = std::make_pair(s.input_views, s.query_view);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&s);
  }
  std::vector<double> all_ssim, all_psnr, all_fvd;
  for (const auto& key : order) {
    const auto& members = groups[key];
    ReportRow row;
    row.input_views = key.first;
    row.query_view = key.second;
    row.clips = static_cast<int>(members.size());
    std::vector<double> ss, ps;
    for (const auto* m : members) {
      const ClipScore c = score_clip(m->prediction, m->target);
      ss.push_back(c.ssim);
      ps.push_back(c.psnr);
      row.infinite_psnr_frames += c.infinite_psnr_frames;
    }
    if (metrics.ssim) row.ssim = mean_finite(ss);
    if (metrics.psnr) {
      bool all_inf = true;
      for (double p : ps) all_inf = all_inf && std::isinf(p);
      row.psnr = all_inf ? std::numeric_limits<double>::infinity() : mean_finite(ps);
    }
    if (metrics.fvd && members.size() >= 2) {
      std::vector<Tensor> real, fake;
      for (const auto* m : members) {
        real.push_back(m->target);
        fake.push_back(m->prediction);
      }
      row.fvd = fvd(real, fake, *extractor);
    }
    all_ssim.push_back(row.ssim);
    all_psnr.push_back(row.psnr);
    all_fvd.push_back(row.fvd);
    report.aggregate.clips += row.clips;
    report.aggregate.infinite_psnr_frames += row.infinite_psnr_frames;
    report.rows.push_back(std::move(row));
  }
  report.aggregate.input_views = report.rows.front().input_views;
  for (const auto& r : report.rows) {
    if (r.input_views != report.aggregate.input_views) report.aggregate.input_views = "mixed";
  }
  report.aggregate.query_view = "ALL";
  report.aggregate.ssim = mean_finite(all_ssim);
  const bool all_inf = !all_psnr.empty() && std::all_of(all_psnr.begin(), all_psnr.end(), [](double x) {
    return std::isinf(x) && x > 0;
  });
  report.aggregate.psnr = all_inf ? std::numeric_limits<double>::infinity() : mean_finite(all_psnr);
  report.aggregate.fvd = mean_finite(all_fvd);
  return report;
}

}  // namespace novelview
