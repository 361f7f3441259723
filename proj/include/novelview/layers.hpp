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

#include <string>
#include <vector>

#include "novelview/ops.hpp"
#include "novelview/parameters.hpp"

namespace novelview {

/// 3D convolution with "same" padding. Parameters `<name>.weight` of shape
/// (kT, kH, kW, Ci, Co) and `<name>.bias` of shape (Co).
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(ParameterSet& params, const std::string& name, std::int64_t in_channels, std::int64_t out_channels,
         ag::Triple kernel, ag::Triple stride, Rng& rng);

  ag::Var operator()(const ag::Var& x) const;

  std::int64_t in_channels() const { return in_; }
  std::int64_t out_channels() const { return out_; }
  ag::Triple kernel() const { return kernel_; }
  ag::Triple stride() const { return stride_; }

 private:
  const Parameter* weight_ = nullptr;
  const Parameter* bias_ = nullptr;
  std::int64_t in_ = 0, out_ = 0;
  ag::Triple kernel_{1, 1, 1}, stride_{1, 1, 1};
};

/// Fully connected layer: weight (In, Out), bias (Out).
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, std::int64_t in, std::int64_t out, Rng& rng);

  ag::Var operator()(const ag::Var& x) const;
  std::int64_t in_features() const { return in_; }
  std::int64_t out_features() const { return out_; }

 private:
  const Parameter* weight_ = nullptr;
  const Parameter* bias_ = nullptr;
  std::int64_t in_ = 0, out_ = 0;
};

struct LstmState {
  ag::Var h;
  ag::Var c;
};

/// Convolutional LSTM cell over rank-5 (B, T, H, W, C) states. All four gates
/// come from one convolution of [x, h].
class ConvLstmCell {
 public:
  ConvLstmCell() = default;
  ConvLstmCell(ParameterSet& params, const std::string& name, std::int64_t in_channels, std::int64_t hidden,
               ag::Triple kernel, Rng& rng);

  LstmState zero_state(const ag::Var& like) const;
  LstmState step(const ag::Var& x, const LstmState& state) const;
  std::int64_t hidden() const { return hidden_; }

 private:
  Conv3d gates_;
  std::int64_t hidden_ = 0;
};

/// Bidirectional convLSTM followed by a unidirectional convLSTM, recurring
/// over a sequence of feature maps (the input views). Returns the final
/// hidden state of the unidirectional layer.
class ConvLstmAggregator {
 public:
  ConvLstmAggregator() = default;
  ConvLstmAggregator(ParameterSet& params, const std::string& name, std::int64_t in_channels,
                     std::int64_t bi_hidden, std::int64_t uni_hidden, ag::Triple kernel, Rng& rng);

  ag::Var operator()(const std::vector<ag::Var>& sequence) const;
  std::int64_t out_channels() const { return uni_.hidden(); }

 private:
  ConvLstmCell forward_;
  ConvLstmCell backward_;
  ConvLstmCell uni_;
};

}  // namespace novelview
