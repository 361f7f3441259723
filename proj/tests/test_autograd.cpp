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

#include "novelview/errors.hpp"
#include "novelview/layers.hpp"
#include "novelview/optim.hpp"
#include "test_support.hpp"

using namespace nvtest;
using novelview::ParameterSet;

namespace {

// Direct-loop convolution with the same padding convention as the library.
Tensor naive_conv3d(const Tensor& x, const Tensor& w, const Tensor& b, ag::Triple s) {
  const auto B = x.dim(0), ci = x.dim(4), co = w.dim(4);
  const std::int64_t in[3] = {x.dim(1), x.dim(2), x.dim(3)};
  const std::int64_t k[3] = {w.dim(0), w.dim(1), w.dim(2)};
  std::int64_t out[3], pad[3];
  for (int a = 0; a < 3; ++a) {
    out[a] = (in[a] + s[a] - 1) / s[a];
    const auto total = std::max<std::int64_t>((out[a] - 1) * s[a] + k[a] - in[a], 0);
    pad[a] = total / 2;
  }
  Tensor y({B, out[0], out[1], out[2], co});
  for (std::int64_t n = 0; n < B; ++n)
    for (std::int64_t ot = 0; ot < out[0]; ++ot)
      for (std::int64_t oh = 0; oh < out[1]; ++oh)
        for (std::int64_t ow = 0; ow < out[2]; ++ow)
          for (std::int64_t o = 0; o < co; ++o) {
            double acc = b.empty() ? 0.0 : b[o];
            for (std::int64_t dt = 0; dt < k[0]; ++dt)
              for (std::int64_t dh = 0; dh < k[1]; ++dh)
                for (std::int64_t dw = 0; dw < k[2]; ++dw) {
                  const auto it = ot * s[0] + dt - pad[0], ih = oh * s[1] + dh - pad[1], iw = ow * s[2] + dw - pad[2];
                  if (it < 0 || ih < 0 || iw < 0 || it >= in[0] || ih >= in[1] || iw >= in[2]) continue;
                  for (std::int64_t c = 0; c < ci; ++c) {
                    const auto xi = (((n * in[0] + it) * in[1] + ih) * in[2] + iw) * ci + c;
                    const auto wi = (((dt * k[1] + dh) * k[2] + dw) * ci + c) * co + o;
                    acc += static_cast<double>(x[xi]) * w[wi];
                  }
                }
            y[(((n * out[0] + ot) * out[1] + oh) * out[2] + ow) * co + o] = static_cast<float>(acc);
          }
  return y;
}

}  // namespace

TEST(Conv3d, MatchesDirectLoops) {
  Rng rng(1);
  for (ag::Triple stride : {ag::Triple{1, 1, 1}, ag::Triple{1, 2, 2}, ag::Triple{2, 2, 2}}) {
    for (int k : {1, 3, 5}) {
      const Tensor x = random_tensor({2, 5, 7, 6, 3}, rng);
      const Tensor w = random_tensor({k, k, k, 3, 4}, rng);
      const Tensor b = random_tensor({4}, rng);
      const Tensor got = ag::conv3d(ag::Var(x), ag::Var(w), ag::Var(b), stride).value();
      const Tensor want = naive_conv3d(x, w, b, stride);
      ASSERT_EQ(got.shape(), want.shape());
      EXPECT_LT(novelview::max_abs_diff(got, want), 1e-4f) << "k=" << k << " stride=" << stride[1];
    }
  }
}

TEST(Conv3d, Gradients) {
  Rng rng(2);
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::conv3d(v[0], v[1], v[2], {1, 2, 2}); },
                   {random_tensor({1, 3, 4, 5, 2}, rng), random_tensor({3, 3, 3, 2, 3}, rng), random_tensor({3}, rng)});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::conv3d(v[0], v[1], v[2], {2, 1, 1}); },
                   {random_tensor({2, 3, 2, 2, 3}, rng), random_tensor({1, 1, 1, 3, 2}, rng), random_tensor({2}, rng)});
}

TEST(Conv3d, RejectsChannelMismatch) {
  EXPECT_THROW(ag::conv3d(ag::Var(Tensor({1, 2, 2, 2, 3})), ag::Var(Tensor({1, 1, 1, 4, 2})), ag::Var()),
               novelview::ShapeError);
}

TEST(Elementwise, Gradients) {
  Rng rng(3);
  const Tensor a = random_tensor({2, 3, 4}, rng), b = random_tensor({2, 3, 4}, rng);
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::mul(ag::add(v[0], v[1]), ag::sub(v[0], v[1])); },
                   {a, b});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::sigmoid(ag::scale(v[0], 2.0f)); }, {a});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::tanh(ag::add_scalar(v[0], 0.3f)); }, {a});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::leaky_relu(ag::neg(v[0])); }, {a});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::log_clamped(v[0], 1e-3f); },
                   {random_tensor({10}, rng, 0.1, 0.9)}, 2e-2, 1e-3f);
}

TEST(ShapeOps, Gradients) {
  Rng rng(4);
  const Tensor a = random_tensor({2, 2, 3, 2, 3}, rng), b = random_tensor({2, 2, 3, 2, 2}, rng);
  expect_gradients(
      [](const std::vector<ag::Var>& v) {
        const ag::Var c = ag::concat_channels({v[0], v[1]});
        return ag::slice_channels(c, 1, 4);
      },
      {a, b});
  expect_gradients(
      [](const std::vector<ag::Var>& v) {
        const std::vector<ag::Var> parts{v[0], v[1]};
        return ag::slice_batch(ag::concat_batch(parts), 1, 3);
      },
      {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::max_pool3d(v[0], {1, 3, 3}, {1, 2, 2}); }, {a});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::upsample_nearest(v[0], {2, 1, 2}); }, {a});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::broadcast_to_grid(v[0], 2, 3, 2); },
                   {random_tensor({2, 4}, rng)});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::global_avg_pool(v[0]); }, {a});
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::linear(ag::flatten(v[0]), v[1], v[2]); },
                   {random_tensor({2, 2, 3}, rng), random_tensor({6, 4}, rng), random_tensor({4}, rng)});
}

TEST(Reductions, MseAndMean) {
  const Tensor a({4}, std::vector<float>{1, 2, 3, 4});
  const Tensor b({4}, std::vector<float>{0, 2, 5, 4});
  EXPECT_FLOAT_EQ(ag::mse(ag::Var(a), ag::Var(b)).value()[0], (1.0f + 4.0f) / 4.0f);
  EXPECT_FLOAT_EQ(ag::mean(ag::Var(a)).value()[0], 2.5f);
  Rng rng(5);
  expect_gradients([](const std::vector<ag::Var>& v) { return ag::mse(v[0], v[1]); },
                   {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
}

TEST(MaxPool, SamePaddingIgnoresPadding) {
  const Tensor x({1, 1, 3, 3, 1}, std::vector<float>{-5, -4, -3, -2, -1, -6, -7, -8, -9});
  const Tensor y = ag::max_pool3d(ag::Var(x), {1, 3, 3}, {1, 2, 2}).value();
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2, 1}));
  EXPECT_EQ(y[0], -1.0f);
  EXPECT_EQ(y[3], -1.0f);
}

TEST(Tape, NoGradGuardRecordsNothing) {
  ag::Var w(Tensor({2}, 1.0f), true);
  {
    ag::NoGradGuard guard;
    const ag::Var y = ag::scale(w, 3.0f);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(ag::scale(w, 3.0f).requires_grad());
}

TEST(Tape, GradientsAccumulateOverUses) {
  ag::Var w(Tensor({1}, 2.0f), true);
  ag::add(ag::mul(w, w), w).backward();
  EXPECT_FLOAT_EQ(w.grad()[0], 5.0f);
}

TEST(ConvLstm, CellGradients) {
  Rng rng(6);
  ParameterSet params;
  Rng init(9);
  novelview::ConvLstmCell cell(params, "cell", 2, 3, {3, 3, 3}, init);
  auto two_steps = [&](const ag::Var& x) {
    auto s = cell.zero_state(x);
    s = cell.step(x, s);
    s = cell.step(ag::scale(x, 0.5f), s);
    return ag::concat_channels({s.h, s.c});
  };
  const Tensor x = random_tensor({1, 2, 3, 3, 2}, rng);
  expect_gradients([&](const std::vector<ag::Var>& v) { return two_steps(v[0]); }, {x}, 3e-2);

  // Weight gradient against central differences on a few entries.
  auto& w = params.get("cell.gates.weight").var();
  const ag::Var r(random_tensor({1, 2, 3, 3, 6}, rng));
  auto loss = [&] { return ag::mean(ag::mul(two_steps(ag::Var(x)), r)); };
  params.zero_grad();
  loss().backward();
  const Tensor analytic = w.grad();
  ASSERT_FALSE(analytic.empty());
  for (std::int64_t i = 0; i < w.value().numel(); i += 37) {
    const float keep = w.value()[i];
    w.mutable_value()[i] = keep + 1e-2f;
    const double lp = loss().value()[0];
    w.mutable_value()[i] = keep - 1e-2f;
    const double lm = loss().value()[0];
    w.mutable_value()[i] = keep;
    EXPECT_NEAR(analytic[i], (lp - lm) / 2e-2, 2e-4) << i;
  }
}

TEST(ConvLstm, AggregatorShapeAndOrderSensitivity) {
  Rng rng(7);
  ParameterSet params;
  novelview::ConvLstmAggregator agg(params, "gr", 4, 3, 5, {3, 3, 3}, rng);
  std::vector<ag::Var> seq;
  for (int i = 0; i < 3; ++i) seq.emplace_back(random_tensor({2, 2, 3, 3, 4}, rng));
  const Tensor y = agg(seq).value();
  EXPECT_EQ(y.shape(), (Shape{2, 2, 3, 3, 5}));
  std::vector<ag::Var> rev(seq.rbegin(), seq.rend());
  EXPECT_GT(novelview::max_abs_diff(y, agg(rev).value()), 0.0f);
}

TEST(Parameters, ReadsAreCounted) {
  ParameterSet params;
  Rng rng(1);
  novelview::Linear fc(params, "fc", 3, 2, rng);
  EXPECT_EQ(params.get("fc.weight").reads(), 0u);
  fc(ag::Var(Tensor({1, 3})));
  EXPECT_EQ(params.get("fc.weight").reads(), 1u);
  params.reset_reads();
  EXPECT_EQ(params.get("fc.bias").reads(), 0u);
  EXPECT_THROW(params.add("fc.weight", Tensor({1})), novelview::Error);
}

TEST(Adam, FirstStepMatchesClosedForm) {
  ParameterSet params;
  auto& p = params.add("w", Tensor({2}, std::vector<float>{1.0f, -1.0f}));
  ag::mean(ag::mul(p.use(), ag::Var(Tensor({2}, std::vector<float>{4.0f, -2.0f})))).backward();
  novelview::Adam adam;
  adam.step(params.all());
  // Bias-corrected first step moves each weight by lr * g / (|g| + eps') = lr * sign(g).
  EXPECT_NEAR(p.var().value()[0], 1.0 - 2e-4, 1e-7);
  EXPECT_NEAR(p.var().value()[1], -1.0 + 2e-4, 1e-7);
  EXPECT_EQ(adam.steps(), 1);
  const auto state = adam.state();
  EXPECT_NEAR(state.at("w.m")[0], 0.5 * 2.0, 1e-6);
  EXPECT_NEAR(state.at("w.v")[0], 0.001 * 4.0, 1e-9);
}

TEST(Rng, DeterministicAndSerializable) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  a.normal();
  Rng c = Rng::deserialize(a.serialize());
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.uniform(), c.uniform());
  Rng d1 = Rng::derived(1, 0), d2 = Rng::derived(1, 1);
  EXPECT_NE(d1.next_u64(), d2.next_u64());
  for (int i = 0; i < 1000; ++i) {
    const auto k = a.below(7);
    EXPECT_LT(k, 7u);
  }
}
