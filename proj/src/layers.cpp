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

#include "novelview/layers.hpp"

#include "novelview/errors.hpp"

namespace novelview {

Conv3d::Conv3d(ParameterSet& params, const std::string& name, std::int64_t in_channels,
               std::int64_t out_channels, ag::Triple kernel, ag::Triple stride, Rng& rng)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride) {
  if (in_channels < 1 || out_channels < 1) throw ConfigError("conv '" + name + "' needs positive channel counts");
  const std::int64_t taps = std::int64_t{kernel[0]} * kernel[1] * kernel[2];
  weight_ = &params.add(name + ".weight",
                        glorot_uniform({kernel[0], kernel[1], kernel[2], in_channels, out_channels},
                                       taps * in_channels, taps * out_channels, rng));
  bias_ = &params.add(name + ".bias", Tensor({out_channels}));
}

ag::Var Conv3d::operator()(const ag::Var& x) const {
  return ag::conv3d(x, weight_->use(), bias_->use(), stride_);
}

Linear::Linear(ParameterSet& params, const std::string& name, std::int64_t in, std::int64_t out, Rng& rng)
    : in_(in), out_(out) {
  if (in < 1 || out < 1) throw ConfigError("linear '" + name + "' needs positive sizes");
  weight_ = &params.add(name + ".weight", glorot_uniform({in, out}, in, out, rng));
  bias_ = &params.add(name + ".bias", Tensor({out}));
}

ag::Var Linear::operator()(const ag::Var& x) const { return ag::linear(x, weight_->use(), bias_->use()); }

ConvLstmCell::ConvLstmCell(ParameterSet& params, const std::string& name, std::int64_t in_channels,
                           std::int64_t hidden, ag::Triple kernel, Rng& rng)
    : gates_(params, name + ".gates", in_channels + hidden, 4 * hidden, kernel, {1, 1, 1}, rng),
      hidden_(hidden) {
  // Forget-gate bias starts at 1 so early steps pass the cell state through.
  auto& bias = params.get(name + ".gates.bias").var().mutable_value();
  for (std::int64_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0f;
}

LstmState ConvLstmCell::zero_state(const ag::Var& like) const {
  return {ag::zeros_with_channels(like, hidden_), ag::zeros_with_channels(like, hidden_)};
}

LstmState ConvLstmCell::step(const ag::Var& x, const LstmState& state) const {
  const ag::Var z = gates_(ag::concat_channels({x, state.h}));
  const std::int64_t n = hidden_;
  // Gate order: input, forget, output, candidate.
  const ag::Var i = ag::sigmoid(ag::slice_channels(z, 0, n));
  const ag::Var f = ag::sigmoid(ag::slice_channels(z, n, 2 * n));
  const ag::Var o = ag::sigmoid(ag::slice_channels(z, 2 * n, 3 * n));
  const ag::Var g = ag::tanh(ag::slice_channels(z, 3 * n, 4 * n));
  ag::Var c = ag::add(ag::mul(f, state.c), ag::mul(i, g));
  ag::Var h = ag::mul(o, ag::tanh(c));
  return {std::move(h), std::move(c)};
}

ConvLstmAggregator::ConvLstmAggregator(ParameterSet& params, const std::string& name, std::int64_t in_channels,
                                       std::int64_t bi_hidden, std::int64_t uni_hidden, ag::Triple kernel,
                                       Rng& rng)
    : forward_(params, name + ".bi_fwd", in_channels, bi_hidden, kernel, rng),
      backward_(params, name + ".bi_bwd", in_channels, bi_hidden, kernel, rng),
      uni_(params, name + ".uni", 2 * bi_hidden, uni_hidden, kernel, rng) {}

ag::Var ConvLstmAggregator::operator()(const std::vector<ag::Var>& sequence) const {
  if (sequence.empty()) throw ShapeError("convLSTM over an empty view sequence");
  const std::size_t n = sequence.size();
  std::vector<ag::Var> fwd(n), bwd(n);
  LstmState s = forward_.zero_state(sequence[0]);
  for (std::size_t i = 0; i < n; ++i) {
    s = forward_.step(sequence[i], s);
    fwd[i] = s.h;
  }
  s = backward_.zero_state(sequence[0]);
  for (std::size_t i = n; i-- > 0;) {
    s = backward_.step(sequence[i], s);
    bwd[i] = s.h;
  }
  s = uni_.zero_state(sequence[0]);
  for (std::size_t i = 0; i < n; ++i) s = uni_.step(ag::concat_channels({fwd[i], bwd[i]}), s);
  return s.h;
}

}  // namespace novelview
