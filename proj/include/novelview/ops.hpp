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

#include <array>
#include <span>
#include <vector>

#include "novelview/autograd.hpp"

namespace novelview::ag {

using Triple = std::array<int, 3>;

// Elementwise arithmetic. Binary ops require identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, float s);
Var add_scalar(const Var& a, float s);
Var neg(const Var& a);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, float slope = 0.2f);

/// Natural log of max(a, eps) clipped to [eps, 1 - eps]; zero gradient where clipped.
Var log_clamped(const Var& a, float eps);

/// Concatenates along the last axis; all leading dims must match.
Var concat_channels(std::span<const Var> parts);
Var concat_channels(std::initializer_list<Var> parts);
/// Channels [begin, end) of the last axis.
Var slice_channels(const Var& a, std::int64_t begin, std::int64_t end);

/// Concatenates along axis 0.
Var concat_batch(std::span<const Var> parts);
/// Rows [begin, end) of axis 0.
Var slice_batch(const Var& a, std::int64_t begin, std::int64_t end);

Var reshape(const Var& a, Shape shape);

/// Zero tensor of `channels` with the leading shape of `like`.
Var zeros_with_channels(const Var& like, std::int64_t channels);

/// x (B, T, H, W, Ci), weight (kT, kH, kW, Ci, Co), bias (Co) or undefined.
/// "Same" padding: output extent is ceil(input / stride) on every axis.
Var conv3d(const Var& x, const Var& weight, const Var& bias, Triple stride = {1, 1, 1});

/// Max pooling with "same" padding (padded taps are ignored).
Var max_pool3d(const Var& x, Triple kernel, Triple stride);

/// Nearest-neighbour upsampling by integer factors along (T, H, W).
Var upsample_nearest(const Var& x, Triple factor);

/// Broadcasts per-sample vectors v (B, K) to a (B, T, H, W, K) grid.
Var broadcast_to_grid(const Var& v, std::int64_t t, std::int64_t h, std::int64_t w);

/// x (B, In) times weight (In, Out) plus bias (Out).
Var linear(const Var& x, const Var& weight, const Var& bias);

/// Collapses every axis after the first.
Var flatten(const Var& x);

/// Mean over (T, H, W): (B, T, H, W, C) -> (B, C).
Var global_avg_pool(const Var& x);

/// Scalar mean of all elements (accumulated in double).
Var mean(const Var& a);
/// Scalar mean squared difference (accumulated in double).
Var mse(const Var& a, const Var& b);

}  // namespace novelview::ag
