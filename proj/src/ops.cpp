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

#include "novelview/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>

#include "novelview/errors.hpp"

namespace novelview::ag {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

Tensor& grad_of(Node& n, std::size_t i) { return n.inputs[i]->grad_buffer(); }
bool wants(const Node& n, std::size_t i) { return n.inputs[i]->requires_grad; }

template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  Tensor out(a.shape());
  const auto& x = a.value();
  for (std::int64_t i = 0; i < x.numel(); ++i) out[i] = fwd(x[i]);
  return make_result(std::move(out), {a}, [deriv](Node& n) {
    Tensor& gx = grad_of(n, 0);
    const Tensor& x = n.inputs[0]->value;
    for (std::int64_t i = 0; i < x.numel(); ++i) gx[i] += n.grad[i] * deriv(x[i], n.value[i]);
  });
}

/// Geometry of one spatial axis under "same" padding.
struct AxisGeometry {
  std::int64_t in, out, kernel, stride, pad;
};

AxisGeometry same_axis(std::int64_t in, std::int64_t kernel, std::int64_t stride) {
  if (stride < 1 || kernel < 1) throw ShapeError("kernel and stride must be positive");
  const std::int64_t out = (in + stride - 1) / stride;
  const std::int64_t total = std::max<std::int64_t>((out - 1) * stride + kernel - in, 0);
  return {in, out, kernel, stride, total / 2};
}

struct ConvGeometry {
  std::int64_t batch, channels_in, channels_out;
  AxisGeometry t, h, w;
  std::int64_t out_voxels() const { return t.out * h.out * w.out; }
  std::int64_t in_voxels() const { return t.in * h.in * w.in; }
  std::int64_t patch() const { return t.kernel * h.kernel * w.kernel * channels_in; }
};

// Copies the receptive fields of output voxels [first, last) of one sample
// into `col` (rows x patch), zero-filling padded taps.
void im2col(const ConvGeometry& g, const float* x, std::int64_t first, std::int64_t last, float* col) {
  const std::int64_t ci = g.channels_in;
  const std::int64_t row_len = g.w.kernel * ci;
  const std::int64_t hw_out = g.h.out * g.w.out;
  for (std::int64_t o = first; o < last; ++o) {
    const std::int64_t ot = o / hw_out;
    const std::int64_t oh = (o / g.w.out) % g.h.out;
    const std::int64_t ow = o % g.w.out;
    float* dst = col + (o - first) * g.patch();
    const std::int64_t w0 = ow * g.w.stride - g.w.pad;
    const std::int64_t kw_lo = std::max<std::int64_t>(0, -w0);
    const std::int64_t kw_hi = std::min<std::int64_t>(g.w.kernel, g.w.in - w0);
    for (std::int64_t kt = 0; kt < g.t.kernel; ++kt) {
      const std::int64_t it = ot * g.t.stride - g.t.pad + kt;
      for (std::int64_t kh = 0; kh < g.h.kernel; ++kh, dst += row_len) {
        const std::int64_t ih = oh * g.h.stride - g.h.pad + kh;
        if (it < 0 || it >= g.t.in || ih < 0 || ih >= g.h.in || kw_hi <= kw_lo) {
          std::memset(dst, 0, sizeof(float) * static_cast<std::size_t>(row_len));
          continue;
        }
        if (kw_lo > 0) std::memset(dst, 0, sizeof(float) * static_cast<std::size_t>(kw_lo * ci));
        const float* src = x + ((it * g.h.in + ih) * g.w.in + (w0 + kw_lo)) * ci;
        std::memcpy(dst + kw_lo * ci, src, sizeof(float) * static_cast<std::size_t>((kw_hi - kw_lo) * ci));
        if (kw_hi < g.w.kernel) {
          std::memset(dst + kw_hi * ci, 0, sizeof(float) * static_cast<std::size_t>((g.w.kernel - kw_hi) * ci));
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds patch rows back into dx.
void col2im(const ConvGeometry& g, const float* col, std::int64_t first, std::int64_t last, float* dx) {
  const std::int64_t ci = g.channels_in;
  const std::int64_t row_len = g.w.kernel * ci;
  const std::int64_t hw_out = g.h.out * g.w.out;
  for (std::int64_t o = first; o < last; ++o) {
    const std::int64_t ot = o / hw_out;
    const std::int64_t oh = (o / g.w.out) % g.h.out;
    const std::int64_t ow = o % g.w.out;
    const float* src = col + (o - first) * g.patch();
    const std::int64_t w0 = ow * g.w.stride - g.w.pad;
    const std::int64_t kw_lo = std::max<std::int64_t>(0, -w0);
    const std::int64_t kw_hi = std::min<std::int64_t>(g.w.kernel, g.w.in - w0);
    for (std::int64_t kt = 0; kt < g.t.kernel; ++kt) {
      const std::int64_t it = ot * g.t.stride - g.t.pad + kt;
      for (std::int64_t kh = 0; kh < g.h.kernel; ++kh, src += row_len) {
        const std::int64_t ih = oh * g.h.stride - g.h.pad + kh;
        if (it < 0 || it >= g.t.in || ih < 0 || ih >= g.h.in || kw_hi <= kw_lo) continue;
        float* dst = dx + ((it * g.h.in + ih) * g.w.in + (w0 + kw_lo)) * ci;
        const float* s = src + kw_lo * ci;
        const std::int64_t n = (kw_hi - kw_lo) * ci;
        for (std::int64_t i = 0; i < n; ++i) dst[i] += s[i];
      }
    }
  }
}

std::int64_t chunk_rows(std::int64_t patch) {
  constexpr std::int64_t kBudget = std::int64_t{1} << 21;  // floats per im2col chunk
  return std::max<std::int64_t>(64, kBudget / std::max<std::int64_t>(patch, 1));
}

bool is_pointwise(const ConvGeometry& g) {
  return g.t.kernel == 1 && g.h.kernel == 1 && g.w.kernel == 1 && g.t.stride == 1 &&
         g.h.stride == 1 && g.w.stride == 1;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants(n, k)) continue;
      Tensor& g = grad_of(n, k);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    if (wants(n, 0)) {
      Tensor& g = grad_of(n, 0);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
    if (wants(n, 1)) {
      Tensor& g = grad_of(n, 1);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& n) {
    const Tensor& x = n.inputs[0]->value;
    const Tensor& y = n.inputs[1]->value;
    if (wants(n, 0)) {
      Tensor& g = grad_of(n, 0);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * y[i];
    }
    if (wants(n, 1)) {
      Tensor& g = grad_of(n, 1);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * x[i];
    }
  });
}

Var scale(const Var& a, float s) {
  return unary(a, [s](float x) { return s * x; }, [s](float, float) { return s; });
}

Var add_scalar(const Var& a, float s) {
  return unary(a, [s](float x) { return x + s; }, [](float, float) { return 1.0f; });
}

Var neg(const Var& a) { return scale(a, -1.0f); }

Var sigmoid(const Var& a) {
  return unary(
      a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); },
      [](float, float y) { return y * (1.0f - y); });
}

Var tanh(const Var& a) {
  return unary(a, [](float x) { return std::tanh(x); }, [](float, float y) { return 1.0f - y * y; });
}

Var relu(const Var& a) {
  return unary(a, [](float x) { return x > 0.0f ? x : 0.0f; },
               [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Var leaky_relu(const Var& a, float slope) {
  return unary(a, [slope](float x) { return x > 0.0f ? x : slope * x; },
               [slope](float x, float) { return x > 0.0f ? 1.0f : slope; });
}

Var log_clamped(const Var& a, float eps) {
  const float lo = eps;
  const float hi = 1.0f - eps;
  return unary(
      a, [lo, hi](float x) { return std::log(std::clamp(x, lo, hi)); },
      [lo, hi](float x, float) { return (x < lo || x > hi) ? 0.0f : 1.0f / x; });
}

Var concat_channels(std::initializer_list<Var> parts) {
  return concat_channels(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_channels of nothing");
  Shape lead = parts[0].shape();
  lead.pop_back();
  std::vector<std::int64_t> widths;
  std::int64_t total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    const std::int64_t c = s.back();
    s.pop_back();
    if (s != lead) {
      throw ShapeError("concat_channels: leading shape " + to_string(s) + " vs " + to_string(lead));
    }
    widths.push_back(c);
    total += c;
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor out(out_shape);
  const std::int64_t rows = numel_of(lead);
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const float* src = parts[k].value().data();
    const std::int64_t c = widths[k];
    for (std::int64_t r = 0; r < rows; ++r) {
      std::memcpy(out.data() + r * total + offset, src + r * c, sizeof(float) * static_cast<std::size_t>(c));
    }
    offset += c;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_result(std::move(out), std::move(inputs), [widths, rows, total](Node& n) {
    std::int64_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const std::int64_t c = widths[k];
      if (wants(n, k)) {
        float* dst = grad_of(n, k).data();
        for (std::int64_t r = 0; r < rows; ++r) {
          const float* g = n.grad.data() + r * total + offset;
          for (std::int64_t j = 0; j < c; ++j) dst[r * c + j] += g[j];
        }
      }
      offset += c;
    }
  });
}

Var slice_channels(const Var& a, std::int64_t begin, std::int64_t end) {
  const std::int64_t c = a.shape().back();
  if (begin < 0 || end > c || begin >= end) {
    throw ShapeError("slice_channels [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") of " + to_string(a.shape()));
  }
  Shape s = a.shape();
  s.back() = end - begin;
  const std::int64_t rows = a.value().numel() / c;
  const std::int64_t w = end - begin;
  Tensor out(s);
  for (std::int64_t r = 0; r < rows; ++r) {
    std::memcpy(out.data() + r * w, a.value().data() + r * c + begin, sizeof(float) * static_cast<std::size_t>(w));
  }
  return make_result(std::move(out), {a}, [rows, c, begin, w](Node& n) {
    float* dst = grad_of(n, 0).data();
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t j = 0; j < w; ++j) dst[r * c + begin + j] += n.grad[r * w + j];
    }
  });
}

Var concat_batch(std::span<const Var> parts) {
  std::vector<Tensor> values;
  values.reserve(parts.size());
  for (const auto& p : parts) values.push_back(p.value());
  Tensor out = concat_outer(values);
  std::vector<std::int64_t> sizes;
  for (const auto& p : parts) sizes.push_back(p.value().numel());
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_result(std::move(out), std::move(inputs), [sizes](Node& n) {
    std::int64_t offset = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (wants(n, k)) {
        Tensor& g = grad_of(n, k);
        for (std::int64_t i = 0; i < sizes[k]; ++i) g[i] += n.grad[offset + i];
      }
      offset += sizes[k];
    }
  });
}

Var slice_batch(const Var& a, std::int64_t begin, std::int64_t end) {
  Tensor out = a.value().slice_outer(begin, end);
  const std::int64_t inner = a.dim(0) == 0 ? 0 : a.value().numel() / a.dim(0);
  return make_result(std::move(out), {a}, [begin, inner](Node& n) {
    Tensor& g = grad_of(n, 0);
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) g[begin * inner + i] += n.grad[i];
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return make_result(std::move(out), {a}, [](Node& n) {
    Tensor& g = grad_of(n, 0);
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
  });
}

Var zeros_with_channels(const Var& like, std::int64_t channels) {
  Shape s = like.shape();
  s.back() = channels;
  return Var(Tensor(std::move(s)));
}

Var conv3d(const Var& x, const Var& weight, const Var& bias, Triple stride) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 5 || ws.size() != 5) {
    throw ShapeError("conv3d expects x (B,T,H,W,C) and weight (kT,kH,kW,Ci,Co), got " + to_string(xs) +
                     " and " + to_string(ws));
  }
  if (ws[3] != xs[4]) {
    throw ShapeError("conv3d input channels " + std::to_string(xs[4]) + " do not match weight " + to_string(ws));
  }
  ConvGeometry g{xs[0], xs[4], ws[4], same_axis(xs[1], ws[0], stride[0]), same_axis(xs[2], ws[1], stride[1]),
                 same_axis(xs[3], ws[2], stride[2])};
  if (bias.defined() && (bias.shape().size() != 1 || bias.shape()[0] != g.channels_out)) {
    throw ShapeError("conv3d bias shape " + to_string(bias.shape()));
  }
  const std::int64_t patch = g.patch();
  const std::int64_t co = g.channels_out;
  Tensor out({g.batch, g.t.out, g.h.out, g.w.out, co});
  ConstMatMap wmat(weight.value().data(), patch, co);
  const bool pointwise = is_pointwise(g);
  const std::int64_t rows_per_chunk = chunk_rows(patch);
  FloatBuffer col;
  if (!pointwise) col.resize(static_cast<std::size_t>(std::min(rows_per_chunk, g.out_voxels()) * patch));

  for (std::int64_t b = 0; b < g.batch; ++b) {
    const float* xb = x.value().data() + b * g.in_voxels() * g.channels_in;
    float* ob = out.data() + b * g.out_voxels() * co;
    for (std::int64_t first = 0; first < g.out_voxels(); first += rows_per_chunk) {
      const std::int64_t last = std::min(first + rows_per_chunk, g.out_voxels());
      const std::int64_t rows = last - first;
      MatMap omat(ob + first * co, rows, co);
      if (pointwise) {
        omat.noalias() = ConstMatMap(xb + first * patch, rows, patch) * wmat;
      } else {
        im2col(g, xb, first, last, col.data());
        omat.noalias() = ConstMatMap(col.data(), rows, patch) * wmat;
      }
      if (bias.defined()) omat.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.value().data(), co);
    }
  }

  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [g, pointwise, rows_per_chunk](Node& n) {
    const std::int64_t patch = g.patch();
    const std::int64_t co = g.channels_out;
    const bool want_x = wants(n, 0);
    const bool want_w = wants(n, 1);
    const bool want_b = n.inputs.size() > 2 && wants(n, 2);
    const float* xv = n.inputs[0]->value.data();
    ConstMatMap wmat(n.inputs[1]->value.data(), patch, co);
    float* dx = want_x ? grad_of(n, 0).data() : nullptr;
    std::optional<MatMap> dw;
    if (want_w) dw.emplace(grad_of(n, 1).data(), patch, co);
    float* db = want_b ? grad_of(n, 2).data() : nullptr;
    FloatBuffer col;
    FloatBuffer dcol;
    if (!pointwise) {
      const auto cap = static_cast<std::size_t>(std::min(rows_per_chunk, g.out_voxels()) * patch);
      if (want_w) col.resize(cap);
      if (want_x) dcol.resize(cap);
    }
    for (std::int64_t b = 0; b < g.batch; ++b) {
      const float* xb = xv + b * g.in_voxels() * g.channels_in;
      const float* gb = n.grad.data() + b * g.out_voxels() * co;
      float* dxb = want_x ? dx + b * g.in_voxels() * g.channels_in : nullptr;
      for (std::int64_t first = 0; first < g.out_voxels(); first += rows_per_chunk) {
        const std::int64_t last = std::min(first + rows_per_chunk, g.out_voxels());
        const std::int64_t rows = last - first;
        ConstMatMap gmat(gb + first * co, rows, co);
        if (want_b) {
          Eigen::Map<Eigen::RowVectorXf>(db, co) += gmat.colwise().sum();
        }
        if (pointwise) {
          if (want_w) dw->noalias() += ConstMatMap(xb + first * patch, rows, patch).transpose() * gmat;
          if (want_x) MatMap(dxb + first * patch, rows, patch).noalias() += gmat * wmat.transpose();
          continue;
        }
        if (want_w) {
          im2col(g, xb, first, last, col.data());
          dw->noalias() += ConstMatMap(col.data(), rows, patch).transpose() * gmat;
        }
        if (want_x) {
          MatMap dcm(dcol.data(), rows, patch);
          dcm.noalias() = gmat * wmat.transpose();
          col2im(g, dcol.data(), first, last, dxb);
        }
      }
    }
  });
}

Var max_pool3d(const Var& x, Triple kernel, Triple stride) {
  const Shape& xs = x.shape();
  if (xs.size() != 5) throw ShapeError("max_pool3d expects (B,T,H,W,C), got " + to_string(xs));
  const AxisGeometry gt = same_axis(xs[1], kernel[0], stride[0]);
  const AxisGeometry gh = same_axis(xs[2], kernel[1], stride[1]);
  const AxisGeometry gw = same_axis(xs[3], kernel[2], stride[2]);
  const std::int64_t c = xs[4];
  Tensor out({xs[0], gt.out, gh.out, gw.out, c});
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(out.numel()));
  const float* xv = x.value().data();
  std::int64_t o = 0;
  for (std::int64_t b = 0; b < xs[0]; ++b) {
    for (std::int64_t t = 0; t < gt.out; ++t) {
      for (std::int64_t h = 0; h < gh.out; ++h) {
        for (std::int64_t w = 0; w < gw.out; ++w) {
          for (std::int64_t ch = 0; ch < c; ++ch, ++o) {
            float best = -std::numeric_limits<float>::infinity();
            std::int64_t best_idx = -1;
            for (std::int64_t kt = 0; kt < gt.kernel; ++kt) {
              const std::int64_t it = t * gt.stride - gt.pad + kt;
              if (it < 0 || it >= gt.in) continue;
              for (std::int64_t kh = 0; kh < gh.kernel; ++kh) {
                const std::int64_t ih = h * gh.stride - gh.pad + kh;
                if (ih < 0 || ih >= gh.in) continue;
                for (std::int64_t kw = 0; kw < gw.kernel; ++kw) {
                  const std::int64_t iw = w * gw.stride - gw.pad + kw;
                  if (iw < 0 || iw >= gw.in) continue;
                  const std::int64_t idx = (((b * gt.in + it) * gh.in + ih) * gw.in + iw) * c + ch;
                  if (xv[idx] > best || best_idx < 0) {
                    best = xv[idx];
                    best_idx = idx;
                  }
                }
              }
            }
            out[o] = best;
            argmax[static_cast<std::size_t>(o)] = best_idx;
          }
        }
      }
    }
  }
  return make_result(std::move(out), {x}, [argmax = std::move(argmax)](Node& n) {
    Tensor& g = grad_of(n, 0);
    for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += n.grad[static_cast<std::int64_t>(i)];
  });
}

Var upsample_nearest(const Var& x, Triple factor) {
  const Shape& xs = x.shape();
  if (xs.size() != 5) throw ShapeError("upsample_nearest expects (B,T,H,W,C), got " + to_string(xs));
  const std::int64_t ft = factor[0], fh = factor[1], fw = factor[2];
  if (ft < 1 || fh < 1 || fw < 1) throw ShapeError("upsample factors must be positive");
  const std::int64_t B = xs[0], T = xs[1], H = xs[2], W = xs[3], C = xs[4];
  Tensor out({B, T * ft, H * fh, W * fw, C});
  float* ov = out.data();
  const float* xv = x.value().data();
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t t = 0; t < T * ft; ++t)
      for (std::int64_t h = 0; h < H * fh; ++h)
        for (std::int64_t w = 0; w < W * fw; ++w) {
          const float* src = xv + (((b * T + t / ft) * H + h / fh) * W + w / fw) * C;
          std::memcpy(ov, src, sizeof(float) * static_cast<std::size_t>(C));
          ov += C;
        }
  return make_result(std::move(out), {x}, [=](Node& n) {
    float* g = grad_of(n, 0).data();
    const float* go = n.grad.data();
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t t = 0; t < T * ft; ++t)
        for (std::int64_t h = 0; h < H * fh; ++h)
          for (std::int64_t w = 0; w < W * fw; ++w) {
            float* dst = g + (((b * T + t / ft) * H + h / fh) * W + w / fw) * C;
            for (std::int64_t c = 0; c < C; ++c) dst[c] += go[c];
            go += C;
          }
  });
}

Var broadcast_to_grid(const Var& v, std::int64_t t, std::int64_t h, std::int64_t w) {
  if (v.shape().size() != 2) throw ShapeError("broadcast_to_grid expects (B, K), got " + to_string(v.shape()));
  if (t < 1 || h < 1 || w < 1) throw ShapeError("broadcast_to_grid: grid dims must be positive");
  const std::int64_t B = v.dim(0), K = v.dim(1);
  const std::int64_t cells = t * h * w;
  Tensor out({B, t, h, w, K});
  for (std::int64_t b = 0; b < B; ++b) {
    const float* src = v.value().data() + b * K;
    float* dst = out.data() + b * cells * K;
    for (std::int64_t i = 0; i < cells; ++i) std::memcpy(dst + i * K, src, sizeof(float) * static_cast<std::size_t>(K));
  }
  return make_result(std::move(out), {v}, [B, K, cells](Node& n) {
    Tensor& g = grad_of(n, 0);
    for (std::int64_t b = 0; b < B; ++b) {
      for (std::int64_t i = 0; i < cells; ++i) {
        const float* src = n.grad.data() + (b * cells + i) * K;
        for (std::int64_t k = 0; k < K; ++k) g[b * K + k] += src[k];
      }
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  if (x.shape().size() != 2 || weight.shape().size() != 2 || x.dim(1) != weight.dim(0)) {
    throw ShapeError("linear: x " + to_string(x.shape()) + " weight " + to_string(weight.shape()));
  }
  const std::int64_t B = x.dim(0), in = x.dim(1), outd = weight.dim(1);
  if (bias.defined() && (bias.shape().size() != 1 || bias.dim(0) != outd)) {
    throw ShapeError("linear: bias " + to_string(bias.shape()));
  }
  Tensor out({B, outd});
  MatMap om(out.data(), B, outd);
  om.noalias() = ConstMatMap(x.value().data(), B, in) * ConstMatMap(weight.value().data(), in, outd);
  if (bias.defined()) om.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.value().data(), outd);
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [B, in, outd](Node& n) {
    ConstMatMap g(n.grad.data(), B, outd);
    if (wants(n, 0)) {
      MatMap(grad_of(n, 0).data(), B, in).noalias() +=
          g * ConstMatMap(n.inputs[1]->value.data(), in, outd).transpose();
    }
    if (wants(n, 1)) {
      MatMap(grad_of(n, 1).data(), in, outd).noalias() +=
          ConstMatMap(n.inputs[0]->value.data(), B, in).transpose() * g;
    }
    if (n.inputs.size() > 2 && wants(n, 2)) {
      Eigen::Map<Eigen::RowVectorXf>(grad_of(n, 2).data(), outd) += g.colwise().sum();
    }
  });
}

Var flatten(const Var& x) {
  const std::int64_t B = x.dim(0);
  return reshape(x, {B, B == 0 ? 0 : x.value().numel() / B});
}

Var global_avg_pool(const Var& x) {
  const Shape& xs = x.shape();
  if (xs.size() != 5) throw ShapeError("global_avg_pool expects (B,T,H,W,C), got " + to_string(xs));
  const std::int64_t B = xs[0], C = xs[4], cells = xs[1] * xs[2] * xs[3];
  Tensor out({B, C});
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::int64_t i = 0; i < cells; ++i) s += x.value()[(b * cells + i) * C + c];
      out[b * C + c] = static_cast<float>(s / static_cast<double>(cells));
    }
  }
  return make_result(std::move(out), {x}, [B, C, cells](Node& n) {
    Tensor& g = grad_of(n, 0);
    const float inv = 1.0f / static_cast<float>(cells);
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t i = 0; i < cells; ++i)
        for (std::int64_t c = 0; c < C; ++c) g[(b * cells + i) * C + c] += n.grad[b * C + c] * inv;
  });
}

Var mean(const Var& a) {
  double s = 0.0;
  for (float v : a.value().values()) s += v;
  const auto count = static_cast<double>(a.value().numel());
  Tensor out({1}, static_cast<float>(s / count));
  return make_result(std::move(out), {a}, [count](Node& n) {
    Tensor& g = grad_of(n, 0);
    const float d = static_cast<float>(n.grad[0] / count);
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += d;
  });
}

Var mse(const Var& a, const Var& b) {
  require_same(a, b, "mse");
  double s = 0.0;
  for (std::int64_t i = 0; i < a.value().numel(); ++i) {
    const double d = static_cast<double>(a.value()[i]) - static_cast<double>(b.value()[i]);
    s += d * d;
  }
  const auto count = static_cast<double>(a.value().numel());
  Tensor out({1}, static_cast<float>(s / count));
  return make_result(std::move(out), {a, b}, [count](Node& n) {
    const Tensor& x = n.inputs[0]->value;
    const Tensor& y = n.inputs[1]->value;
    const float k = static_cast<float>(2.0 * n.grad[0] / count);
    if (wants(n, 0)) {
      Tensor& g = grad_of(n, 0);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += k * (x[i] - y[i]);
    }
    if (wants(n, 1)) {
      Tensor& g = grad_of(n, 1);
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] -= k * (x[i] - y[i]);
    }
  });
}

}  // namespace novelview::ag
