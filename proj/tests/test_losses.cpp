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

#include <cmath>

#include "novelview/archive.hpp"
#include "novelview/errors.hpp"
#include "novelview/losses.hpp"
#include "test_support.hpp"

using namespace nvtest;
using namespace novelview;

namespace {

double oracle_mse(const Tensor& a, const Tensor& b) {
  long double acc = 0.0L;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
    acc += d * d;
  }
  return static_cast<double>(acc / a.numel());
}

// Scales the deviation of every feature from the target's by `factor`.
class ScaledIdentity final : public FrameFeatureExtractor {
 public:
  explicit ScaledIdentity(float factor) : factor_(factor) {}
  ag::Var operator()(const ag::Var& frames) const override { return ag::scale(frames, factor_); }
  std::string name() const override { return "scaled"; }

 private:
  float factor_;
};

}  // namespace

TEST(LossWeights, DefaultsAndValidation) {
  const LossWeights w;
  EXPECT_EQ(w.lambda_r, 1.0);
  EXPECT_EQ(w.lambda_p, 0.01);
  EXPECT_EQ(w.lambda_adv, 0.01);
  EXPECT_NO_THROW(w.validate());
  EXPECT_THROW((LossWeights{-1.0, 0.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((LossWeights{1.0, std::nan(""), 0.0}.validate()), ConfigError);
}

TEST(TotalLoss, DefaultWeightsOnUnitTerms) {
  EXPECT_NEAR(total_loss(1.0, 1.0, 1.0, LossWeights{}).total, 1.02, 1e-15);
  EXPECT_EQ(total_loss(0.0, 0.0, 0.0, LossWeights{}).total, 0.0);
  EXPECT_EQ(total_loss(0.37, 5.0, 9.0, LossWeights{1.0, 0.0, 0.0}).total, 0.37);
}

TEST(TotalLoss, KeepsComponentsAndIsLinearInEachTerm) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const LossWeights w{rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)};
    const double r = rng.uniform(0.0, 5.0), p = rng.uniform(0.0, 5.0), a = rng.uniform(-5.0, 5.0);
    const auto b = total_loss(r, p, a, w);
    EXPECT_EQ(b.l_r, r);
    EXPECT_EQ(b.l_p, p);
    EXPECT_EQ(b.l_adv, a);
    EXPECT_NEAR(b.total, w.lambda_r * r + w.lambda_p * p + w.lambda_adv * a, 1e-12);
    const double dr = rng.uniform(0.0, 1.0);
    EXPECT_NEAR(total_loss(r + dr, p, a, w).total - b.total, w.lambda_r * dr, 1e-12);
    EXPECT_NEAR(total_loss(r, p + dr, a, w).total - b.total, w.lambda_p * dr, 1e-12);
    EXPECT_NEAR(total_loss(r, p, a + dr, w).total - b.total, w.lambda_adv * dr, 1e-12);
  }
}

TEST(TotalLoss, ZeroWeightIgnoresNonFiniteTerm) {
  EXPECT_EQ(total_loss(0.5, std::numeric_limits<double>::infinity(), 0.0, LossWeights::preset("l2")).total, 0.5);
}

TEST(TotalLoss, AblationPresetsZeroTheRightTerms) {
  const auto names = LossWeights::preset_names();
  ASSERT_EQ(names.size(), 5u);
  const std::vector<std::array<bool, 3>> active{
      {true, false, false}, {false, true, true}, {true, true, false}, {true, false, true}, {true, true, true}};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto w = LossWeights::preset(names[i]);
    EXPECT_EQ(w.lambda_r != 0.0, active[i][0]) << names[i];
    EXPECT_EQ(w.lambda_p != 0.0, active[i][1]) << names[i];
    EXPECT_EQ(w.lambda_adv != 0.0, active[i][2]) << names[i];
  }
  EXPECT_THROW(LossWeights::preset("l1"), ConfigError);
}

TEST(ReconstructionLoss, ClosedFormsAndOracle) {
  Rng rng(2);
  const Tensor t = random_tensor({2, 4, 5, 5, 3}, rng);
  EXPECT_EQ(reconstruction_loss(t, t), 0.0);
  Tensor shifted = t;
  for (auto& v : shifted.values()) v += 0.5f;
  EXPECT_NEAR(reconstruction_loss(shifted, t), 0.25, 1e-6);
  const Tensor u = random_tensor(t.shape(), rng);
  const double oracle = oracle_mse(u, t);
  EXPECT_NEAR(reconstruction_loss(u, t), oracle, 1e-12 * oracle);
  EXPECT_THROW(reconstruction_loss(u, random_tensor({2, 4, 5, 5, 2}, rng)), ShapeError);
}

TEST(ReconstructionLoss, VarVersionMatchesAndDifferentiates) {
  Rng rng(3);
  const Tensor a = random_tensor({1, 2, 3, 3, 3}, rng), b = random_tensor({1, 2, 3, 3, 3}, rng);
  EXPECT_NEAR(reconstruction_loss(ag::Var(a), ag::Var(b)).value()[0], reconstruction_loss(a, b), 1e-6);
  expect_gradients([](const std::vector<ag::Var>& v) { return reconstruction_loss(v[0], v[1]); }, {a, b}, 2e-2, 1e-2f);
}

TEST(PerceptualLoss, IdentityExtractorReducesToReconstruction) {
  Rng rng(4);
  const IdentityFrameFeatures id;
  const Tensor a = random_tensor({2, 3, 8, 8, 3}, rng), b = random_tensor({2, 3, 8, 8, 3}, rng);
  EXPECT_NEAR(perceptual_loss(a, b, id), reconstruction_loss(a, b), 1e-12);
  EXPECT_EQ(perceptual_loss(a, a, id), 0.0);
  const ScaledIdentity twice(2.0f);
  EXPECT_NEAR(perceptual_loss(a, b, twice), 4.0 * perceptual_loss(a, b, id), 1e-6);
}

TEST(PerceptualLoss, TinyExtractorIsZeroOnEqualClipsAndPositiveOtherwise) {
  Rng rng(5);
  const TinyFrameFeatures tiny;
  const Tensor a = random_tensor({1, 2, 16, 16, 3}, rng), b = random_tensor({1, 2, 16, 16, 3}, rng);
  EXPECT_EQ(perceptual_loss(a, a, tiny), 0.0);
  EXPECT_GT(perceptual_loss(a, b, tiny), 0.0);
  EXPECT_EQ(tiny(ag::Var(a)).shape(), (Shape{1, 2, 2, 2, 32}));
}

TEST(PerceptualLoss, GradientReachesPredictionOnly) {
  Rng rng(6);
  const TinyFrameFeatures tiny;
  const Tensor a = random_tensor({1, 1, 8, 8, 3}, rng), b = random_tensor({1, 1, 8, 8, 3}, rng);
  ag::Var pred(a, true), target(b, true);
  auto loss = perceptual_loss(pred, target, tiny);
  EXPECT_NEAR(loss.value()[0], perceptual_loss(a, b, tiny), 1e-6);
  loss.backward();
  EXPECT_FALSE(pred.grad().empty());
  EXPECT_TRUE(target.grad().empty());
  expect_gradients([&](const std::vector<ag::Var>& v) { return perceptual_loss(v[0], ag::Var(b), tiny); }, {a}, 3e-2,
                   1e-2f);
}

TEST(PerceptualLoss, ExtractorSelection) {
  EXPECT_EQ(make_perceptual_extractor({})->name(), "tiny2d");
  EXPECT_EQ(make_perceptual_extractor({"/nonexistent/vgg.nvw", true})->name(), "tiny2d");
  EXPECT_THROW(make_perceptual_extractor({"/nonexistent/vgg.nvw", false}), ConfigError);
  EXPECT_THROW(make_perceptual_extractor({"", false}), ConfigError);
}

TEST(PerceptualLoss, VggArchiveIsLoadedAndApplied) {
  const auto dir = scratch_dir("vgg");
  const std::vector<std::vector<std::int64_t>> widths{{64, 64}, {128, 128}, {256, 256, 256, 256},
                                                      {512, 512, 512, 512}, {512, 512}};
  Archive a;
  Rng rng(7);
  std::int64_t ch = 3;
  for (std::size_t b = 0; b < widths.size(); ++b) {
    for (std::size_t i = 0; i < widths[b].size(); ++i) {
      const std::string name = "vgg.conv" + std::to_string(b + 1) + "_" + std::to_string(i + 1);
      a.tensors[name + ".weight"] = random_tensor({1, 3, 3, ch, widths[b][i]}, rng, -0.05, 0.05);
      a.tensors[name + ".bias"] = Tensor({widths[b][i]}, 0.01f);
      ch = widths[b][i];
    }
  }
  write_archive(dir / "vgg.nvw", "NVWEIGHT", a);
  const Vgg19Conv52 vgg((dir / "vgg.nvw").string(), 0);
  const Tensor x = random_tensor({1, 1, 32, 32, 3}, rng);
  EXPECT_EQ(vgg(ag::Var(x)).shape(), (Shape{1, 1, 2, 2, 512}));
  EXPECT_EQ(perceptual_loss(x, x, vgg), 0.0);
  EXPECT_EQ(make_perceptual_extractor({(dir / "vgg.nvw").string(), false})->name(), "vgg19_conv5_2");

  a.tensors.erase("vgg.conv5_2.bias");
  write_archive(dir / "short.nvw", "NVWEIGHT", a);
  EXPECT_THROW(Vgg19Conv52((dir / "short.nvw").string()), ConfigError);
}

TEST(AdversarialLoss, ClosedForms) {
  const std::vector<double> half{0.5, 0.5};
  const auto l = adversarial_losses(half, half);
  EXPECT_NEAR(l.discriminator, 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(l.discriminator, 1.386294, 1e-6);

  const std::vector<double> real{0.9}, fake{0.1};
  const auto m = adversarial_losses(real, fake);
  EXPECT_NEAR(m.discriminator, -std::log(0.9) - std::log(1.0 - 0.1), 1e-12);
  EXPECT_NEAR(m.generator, -std::log(0.1), 1e-12);
  EXPECT_NEAR(adversarial_losses(real, fake, true).generator, std::log(1.0 - 0.1), 1e-12);
}

TEST(AdversarialLoss, GeneratorLossVanishesAsFakeScoreApproachesOne) {
  const std::vector<double> real{0.5};
  double previous = std::numeric_limits<double>::infinity();
  for (double s : {0.9, 0.99, 0.999999, 1.0 - 1e-12}) {
    const std::vector<double> fake{s};
    const double g = adversarial_losses(real, fake).generator;
    EXPECT_GE(g, 0.0);
    EXPECT_LT(g, previous);
    previous = g;
  }
  EXPECT_LT(previous, 2e-7);
}

TEST(AdversarialLoss, ScoresOutsideOpenIntervalAreRejected) {
  const std::vector<double> ok{0.5};
  for (double bad : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    const std::vector<double> s{bad};
    EXPECT_THROW(adversarial_losses(s, ok), NumericError) << bad;
    EXPECT_THROW(adversarial_losses(ok, s), NumericError) << bad;
  }
}

TEST(AdversarialLoss, LossesAreFiniteAndNonNegative) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> real(4), fake(4);
    for (auto& v : real) v = rng.uniform(1e-9, 1.0 - 1e-9);
    for (auto& v : fake) v = rng.uniform(1e-9, 1.0 - 1e-9);
    const auto l = adversarial_losses(real, fake);
    EXPECT_TRUE(std::isfinite(l.discriminator) && std::isfinite(l.generator));
    EXPECT_GE(l.discriminator, 0.0);
    EXPECT_GE(l.generator, 0.0);
  }
}

TEST(AdversarialLoss, VarVersionsMatchScalarForm) {
  const Tensor real({2, 1}, std::vector<float>{0.9f, 0.7f});
  const Tensor fake({2, 1}, std::vector<float>{0.1f, 0.4f});
  const std::vector<double> r{0.9f, 0.7f}, f{0.1f, 0.4f};
  const auto l = adversarial_losses(r, f);
  EXPECT_NEAR(discriminator_loss(ag::Var(real), ag::Var(fake)).value()[0], l.discriminator, 1e-6);
  EXPECT_NEAR(generator_adversarial_loss(ag::Var(fake)).value()[0], l.generator, 1e-6);
  EXPECT_NEAR(generator_adversarial_loss(ag::Var(fake), true).value()[0], adversarial_losses(r, f, true).generator, 1e-6);
  expect_gradients([](const std::vector<ag::Var>& v) { return discriminator_loss(v[0], v[1]); }, {real, fake}, 2e-2,
                   1e-3f);
  expect_gradients([](const std::vector<ag::Var>& v) { return generator_adversarial_loss(v[0]); }, {fake}, 2e-2, 1e-3f);
}

TEST(AdversarialLoss, ClampKeepsVarLossesFinite) {
  const Tensor ones({1, 1}, 1.0f), zeros({1, 1}, 0.0f);
  const double d = discriminator_loss(ag::Var(zeros), ag::Var(ones)).value()[0];
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_NEAR(d, -2.0 * std::log(1e-7), 0.05);
  EXPECT_THROW(generator_adversarial_loss(ag::Var(Tensor({1, 1}, std::nanf("")))), NumericError);
}
