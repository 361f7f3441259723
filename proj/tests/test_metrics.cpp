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

#include <Eigen/QR>
#include <cmath>

#include "novelview/errors.hpp"
#include "novelview/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace nvtest;
using namespace novelview;

namespace {

FeatureDistribution moments(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  FeatureDistribution d;
  d.mean = std::move(mean);
  d.covariance = std::move(cov);
  d.sample_count = 100;
  return d;
}

Eigen::MatrixXd random_spd(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd random_vector(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Eigen::MatrixXd random_rotation(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

// Features are the first F pixel values of each clip.
class PixelFeatures final : public ClipFeatureExtractor {
 public:
  explicit PixelFeatures(std::int64_t f) : f_(f) {}
  ag::Var operator()(const ag::Var& clips) const override {
    const auto b = clips.dim(0), per = clips.value().numel() / b;
    Tensor out({b, f_});
    for (std::int64_t i = 0; i < b; ++i)
      for (std::int64_t k = 0; k < f_; ++k) out[i * f_ + k] = clips.value()[i * per + k];
    return ag::Var(out);
  }
  std::string name() const override { return "pixels"; }

 private:
  std::int64_t f_;
};

Tensor constant(const Shape& s, float v) { return Tensor(s, v); }

}  // namespace

TEST(Ssim, IdenticalFramesScoreOne) {
  Rng rng(1);
  const Tensor a = random_tensor({32, 40, 3}, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
}

TEST(Ssim, ConstantFramesMatchOracle) {
  const Tensor a = constant({24, 24, 3}, -1.0f), b = constant({24, 24, 3}, 1.0f);
  const double s = ssim(a, b);
  EXPECT_NEAR(s, oracle_ssim(a, b), 1e-9);
  EXPECT_NEAR(s, 1e-4 / (1.0 + 1e-4), 1e-9);
}

TEST(Ssim, RandomFramesMatchOracle) {
  Rng rng(2);
  const Tensor a = random_tensor({56, 56, 3}, rng);
  Tensor b = a;
  for (auto& v : b.values()) v = std::clamp(v + static_cast<float>(rng.uniform(-0.4, 0.4)), -1.0f, 1.0f);
  EXPECT_NEAR(ssim(a, b), oracle_ssim(a, b), 1e-7);
  const Tensor c = random_tensor({56, 56, 3}, rng);
  EXPECT_NEAR(ssim(a, c), oracle_ssim(a, c), 1e-7);
}

TEST(Ssim, SymmetricAndBoundedAbove) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor a = random_tensor({16, 20, 3}, rng), b = random_tensor({16, 20, 3}, rng);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_LT(ssim(a, b), 1.0);
    EXPECT_GE(ssim(a, b), -1.0);
  }
}

TEST(Ssim, RejectsMismatchedOrTinyFrames) {
  EXPECT_THROW(ssim(Tensor({16, 16, 3}), Tensor({16, 17, 3})), ShapeError);
  EXPECT_THROW(ssim(Tensor({10, 16, 3}), Tensor({10, 16, 3})), ShapeError);
}

TEST(Psnr, ClosedForms) {
  // A raw difference of 0.2 is 0.1 after mapping to [0, 1], so MSE = 0.01.
  const Tensor a = constant({8, 8, 3}, 0.0f), b = constant({8, 8, 3}, 0.2f);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-6);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_GT(psnr(a, a), 0.0);
  EXPECT_THROW(psnr(a, Tensor({8, 8, 2})), ShapeError);
}

TEST(Psnr, MatchesOracleAndDecreasesWithError) {
  Rng rng(4);
  const Tensor a = random_tensor({16, 16, 3}, rng), b = random_tensor({16, 16, 3}, rng);
  long double mse = 0.0L;
  for (std::int64_t i = 0; i < a.numel(); ++i) mse += std::pow((static_cast<long double>(a[i]) - b[i]) / 2.0L, 2);
  mse /= a.numel();
  EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / static_cast<double>(mse)), 1e-9);

  double previous = std::numeric_limits<double>::infinity();
  for (float delta : {0.01f, 0.05f, 0.1f, 0.3f, 0.7f, 1.2f}) {
    Tensor c = a;
    for (auto& v : c.values()) v += delta;
    const double p = psnr(a, c);
    EXPECT_LT(p, previous);
    previous = p;
  }
}

TEST(ScoreClip, AveragesFramesAndExcludesExactOnes) {
  Rng rng(5);
  Tensor pred = random_tensor({3, 16, 16, 3}, rng);
  Tensor target = pred;
  const auto per = 16 * 16 * 3;
  for (int i = per; i < pred.numel(); ++i) target[i] = std::clamp(pred[i] + 0.2f, -1.0f, 1.0f);
  const auto s = score_clip(pred, target);
  EXPECT_EQ(s.infinite_psnr_frames, 1);
  const auto frame = [&](const Tensor& t, int k) { return t.slice_outer(k, k + 1).reshaped({16, 16, 3}); };
  EXPECT_NEAR(s.psnr, 0.5 * (psnr(frame(pred, 1), frame(target, 1)) + psnr(frame(pred, 2), frame(target, 2))), 1e-12);
  double ss = 0.0;
  for (int k = 0; k < 3; ++k) ss += ssim(frame(pred, k), frame(target, k));
  EXPECT_NEAR(s.ssim, ss / 3.0, 1e-12);
  EXPECT_TRUE(std::isinf(score_clip(pred, pred).psnr));
}

TEST(Frechet, IdenticalDistributionsGiveZero) {
  Rng rng(6);
  const auto p = moments(random_vector(6, rng), random_spd(6, rng));
  EXPECT_NEAR(frechet_distance(p, p), 0.0, 1e-6);
}

TEST(Frechet, OneDimensionalClosedForm) {
  const auto p = moments(Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto q = moments(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 4.0));
  EXPECT_NEAR(frechet_distance(p, q), 2.0, 1e-12);
}

TEST(Frechet, DiagonalCovariancesMatchElementwiseForm) {
  Rng rng(7);
  const int n = 5;
  Eigen::VectorXd a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.uniform(0.1, 3.0);
    b[i] = rng.uniform(0.1, 3.0);
  }
  const auto mp = random_vector(n, rng), mq = random_vector(n, rng);
  double expected = (mp - mq).squaredNorm();
  for (int i = 0; i < n; ++i) expected += std::pow(std::sqrt(a[i]) - std::sqrt(b[i]), 2);
  EXPECT_NEAR(frechet_distance(moments(mp, a.asDiagonal()), moments(mq, b.asDiagonal())), expected, 1e-10);
}

TEST(Frechet, SymmetricNonNegativeAndRotationInvariant) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    const auto p = moments(random_vector(n, rng), random_spd(n, rng));
    const auto q = moments(random_vector(n, rng), random_spd(n, rng));
    const double d = frechet_distance(p, q);
    EXPECT_GE(d, -1e-6);
    EXPECT_NEAR(frechet_distance(q, p), d, 1e-8 * std::max(1.0, d));
    const Eigen::MatrixXd r = random_rotation(n, rng);
    const auto rp = moments(r * p.mean, r * p.covariance * r.transpose());
    const auto rq = moments(r * q.mean, r * q.covariance * r.transpose());
    EXPECT_NEAR(frechet_distance(rp, rq), d, 1e-6 * std::max(1.0, d));
  }
}

TEST(Frechet, SingularCovarianceIsAccepted) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
  s(0, 0) = 1.0;
  const auto p = moments(Eigen::VectorXd::Zero(3), s);
  EXPECT_NEAR(frechet_distance(p, p), 0.0, 1e-9);
}

TEST(Frechet, RejectsIndefiniteAndMismatched) {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(1, 1) = -0.5;
  const auto p = moments(Eigen::VectorXd::Zero(2), bad);
  const auto q = moments(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_THROW(frechet_distance(p, q), NumericError);
  EXPECT_THROW(frechet_distance(q, moments(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3))), ShapeError);
}

TEST(FeatureDistribution, UnbiasedFit) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 3, 6, 5, 4;
  const auto d = FeatureDistribution::fit(x);
  EXPECT_EQ(d.sample_count, 3);
  EXPECT_NEAR(d.mean[0], 3.0, 1e-15);
  EXPECT_NEAR(d.mean[1], 4.0, 1e-15);
  EXPECT_NEAR(d.covariance(0, 0), 4.0, 1e-12);
  EXPECT_NEAR(d.covariance(1, 1), 4.0, 1e-12);
  EXPECT_NEAR(d.covariance(0, 1), 2.0, 1e-12);
  EXPECT_NEAR(d.covariance(1, 0), d.covariance(0, 1), 1e-9);
  EXPECT_THROW(FeatureDistribution::fit(Eigen::MatrixXd::Zero(1, 2)), NumericError);
}

TEST(Fvd, SameClipsGiveZeroAndSidesCommute) {
  Rng rng(9);
  std::vector<Tensor> real, fake;
  for (int i = 0; i < 6; ++i) {
    real.push_back(random_tensor({4, 16, 16, 3}, rng));
    fake.push_back(random_tensor({4, 16, 16, 3}, rng));
  }
  const TinyClipFeatures tiny;
  EXPECT_NEAR(fvd(real, real, tiny), 0.0, 1e-6);
  const double d = fvd(real, fake, tiny);
  EXPECT_GT(d, 0.0);
  EXPECT_NEAR(fvd(fake, real, tiny), d, 1e-9 * std::max(1.0, d));
  EXPECT_THROW(fvd({real[0]}, fake, tiny), NumericError);
}

TEST(Fvd, MatchesFrechetOfFittedGaussianClouds) {
  Rng rng(10);
  const int f = 3, n = 400;
  const Eigen::Vector3d mu_p(0.1, -0.2, 0.0), mu_q(-0.1, 0.1, 0.2);
  Eigen::Matrix3d lp, lq;
  lp << 0.2, 0, 0, 0.05, 0.1, 0, 0.02, -0.03, 0.15;
  lq << 0.1, 0, 0, -0.04, 0.2, 0, 0.0, 0.05, 0.1;
  std::vector<Tensor> real, fake;
  Eigen::MatrixXd xs(n, f), ys(n, f);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d z1(rng.normal(), rng.normal(), rng.normal()), z2(rng.normal(), rng.normal(), rng.normal());
    const Eigen::Vector3d x = mu_p + lp * z1, y = mu_q + lq * z2;
    Tensor a({1, 2, 2, 3}), b({1, 2, 2, 3});
    for (int k = 0; k < f; ++k) {
      a[k] = static_cast<float>(x[k]);
      b[k] = static_cast<float>(y[k]);
      xs(i, k) = a[k];
      ys(i, k) = b[k];
    }
    real.push_back(a);
    fake.push_back(b);
  }
  const PixelFeatures pixels(f);
  const double got = fvd(real, fake, pixels);
  EXPECT_NEAR(got, frechet_distance(FeatureDistribution::fit(xs), FeatureDistribution::fit(ys)), 1e-9);
  const double truth = frechet_distance(moments(mu_p, lp * lp.transpose()), moments(mu_q, lq * lq.transpose()));
  EXPECT_NEAR(got, truth, 0.25 * truth);
}

TEST(ClipFeatures, TinyExtractorIsDeterministic) {
  Rng rng(11);
  std::vector<Tensor> clips;
  for (int i = 0; i < 10; ++i) clips.push_back(random_tensor({4, 16, 16, 3}, rng));
  const TinyClipFeatures a, b;
  const auto fa = clip_features(clips, a);
  EXPECT_EQ(fa.rows(), 10);
  EXPECT_EQ(fa.cols(), 64);
  EXPECT_EQ((fa - clip_features(clips, b)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(make_clip_extractor("")->name(), "tiny3d");
  EXPECT_EQ(make_clip_extractor("/nonexistent/i3d.nvw")->name(), "tiny3d");
}

TEST(Report, OneRowPerQueryViewPlusAggregate) {
  Rng rng(12);
  std::vector<ScoredClip> scored;
  for (int q = 6; q <= 24; ++q) {
    for (int k = 0; k < 2; ++k) {
      scored.push_back({"v1+v2+v3+v4+v5", "v" + std::to_string(q), random_tensor({4, 16, 16, 3}, rng),
                        random_tensor({4, 16, 16, 3}, rng)});
    }
  }
  const TinyClipFeatures tiny;
  const auto report = build_report(scored, MetricSet{}, &tiny);
  ASSERT_EQ(report.rows.size(), 19u);
  EXPECT_EQ(report.rows.front().query_view, "v6");
  EXPECT_EQ(report.rows.back().query_view, "v24");
  EXPECT_EQ(report.aggregate.query_view, "ALL");
  EXPECT_EQ(report.aggregate.clips, 38);
  double ssim_sum = 0.0;
  for (const auto& r : report.rows) {
    EXPECT_EQ(r.clips, 2);
    EXPECT_TRUE(std::isfinite(r.fvd));
    ssim_sum += r.ssim;
  }
  EXPECT_NEAR(report.aggregate.ssim, ssim_sum / 19.0, 1e-12);

  const std::string csv = report.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "input_views,query_view,ssim,psnr,fvd,clips,extractor");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
  EXPECT_NE(csv.find("v1+v2+v3+v4+v5,ALL,"), std::string::npos);

  const auto again = build_report(scored, MetricSet{}, &tiny);
  EXPECT_EQ(again.to_csv(), csv);
}

TEST(Report, SelectedMetricsAndEdgeCases) {
  Rng rng(13);
  const Tensor c = random_tensor({2, 16, 16, 3}, rng);
  const std::vector<ScoredClip> scored{{"a", "q1", c, c}, {"a", "q2", c, random_tensor({2, 16, 16, 3}, rng)}};
  EXPECT_THROW(build_report(scored, MetricSet{false, false, false}, nullptr), ConfigError);
  EXPECT_THROW(build_report({}, MetricSet{}, nullptr), ConfigError);
  EXPECT_THROW(build_report(scored, MetricSet{true, true, true}, nullptr), ConfigError);

  const auto report = build_report(scored, MetricSet{true, true, false}, nullptr);
  EXPECT_TRUE(std::isinf(report.rows[0].psnr));
  EXPECT_EQ(report.rows[0].infinite_psnr_frames, 2);
  EXPECT_TRUE(std::isfinite(report.aggregate.psnr));
  EXPECT_NEAR(report.aggregate.psnr, report.rows[1].psnr, 1e-12);
  const std::string csv = report.to_csv();
  EXPECT_NE(csv.find(",none\n"), std::string::npos);
  EXPECT_NE(csv.find("a,q1,1.000000,inf,,1,none"), std::string::npos) << csv;

  const TinyClipFeatures tiny;
  EXPECT_TRUE(std::isnan(build_report(scored, MetricSet{}, &tiny).rows[0].fvd));
  EXPECT_EQ(join_view_ids({"x", "y", "z"}), "x+y+z");
}
