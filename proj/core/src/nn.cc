// Copyright 2026 The adfd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adfd/nn.h"

#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "adfd/error.h"

namespace adfd {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;
template <typename T>
using MapRowVec = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using ConstMapRowVec = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

// Column sums of a row-major rows x cols block, accumulated in a fixed
// order. Eigen's vectorized reductions split work by address alignment.
template <typename T>
void SumRows(const T* data, std::size_t rows, std::size_t cols, std::vector<T>& out) {
  std::vector<double> acc(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) acc[c] += static_cast<double>(data[r * cols + c]);
  }
  out.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) out[c] = static_cast<T>(acc[c]);
}

struct Shape {
  std::size_t h = 0, w = 0, c = 0;
  std::size_t size() const { return h * w * c; }
};

struct PlannedLayer {
  LayerSpec spec;
  Shape in, out;
  int weight = -1;  // index into model params
  int bias = -1;
};

std::vector<PlannedLayer> Plan(const Architecture& arch) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kShapeMismatch, "architecture '" + arch.arch_id + "': " + why);
  };
  if (arch.input_size() == 0) fail("empty input shape");
  if (arch.layers.empty() || arch.layers.back().kind != LayerKind::kSoftmax) {
    fail("stack must end with Softmax");
  }
  std::vector<PlannedLayer> plan;
  Shape s{arch.input[0], arch.input[1], arch.input[2]};
  int next_param = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& spec = arch.layers[i];
    PlannedLayer p{spec, s, s};
    switch (spec.kind) {
      case LayerKind::kConv3x3:
        if (spec.units == 0) fail("Conv3x3 needs output channels");
        p.out = {s.h, s.w, spec.units};
        p.weight = next_param++;
        p.bias = next_param++;
        break;
      case LayerKind::kAvgPool2x2:
        if (s.h % 2 != 0 || s.w % 2 != 0) fail("AvgPool2x2 needs even height and width");
        p.out = {s.h / 2, s.w / 2, s.c};
        break;
      case LayerKind::kReLU:
        break;
      case LayerKind::kDropout:
        if (!(spec.rate >= 0.0 && spec.rate < 1.0)) fail("dropout rate must be in [0, 1)");
        break;
      case LayerKind::kFlatten:
        p.out = {1, 1, s.size()};
        break;
      case LayerKind::kDense:
        if (spec.units == 0) fail("Dense needs outputs");
        if (s.h != 1 || s.w != 1) fail("Dense needs a flattened input");
        p.out = {1, 1, spec.units};
        p.weight = next_param++;
        p.bias = next_param++;
        break;
      case LayerKind::kSoftmax:
        if (i + 1 != arch.layers.size()) fail("Softmax must be the last layer");
        if (s.h != 1 || s.w != 1 || s.c < 2) fail("Softmax needs a flat input of >= 2 classes");
        break;
    }
    s = p.out;
    plan.push_back(p);
  }
  return plan;
}

std::size_t ParseDim(std::string_view text, std::string_view arch_id) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || v == 0) {
    throw Error(ErrorCode::kUnknownArch, "bad dimension in '" + std::string(arch_id) + "'");
  }
  return v;
}

Architecture CnnBaseline(std::string arch_id, std::size_t height, std::size_t width) {
  Architecture a;
  a.arch_id = std::move(arch_id);
  a.input = {height, width, 3};
  for (std::size_t channels : {32u, 64u, 128u}) {
    a.layers.push_back(LayerSpec::Conv3x3(channels));
    a.layers.push_back(LayerSpec::ReLU());
    a.layers.push_back(LayerSpec::AvgPool2x2());
    a.layers.push_back(LayerSpec::Dropout(0.2));
  }
  a.layers.push_back(LayerSpec::Flatten());
  a.layers.push_back(LayerSpec::Dense(256));
  a.layers.push_back(LayerSpec::ReLU());
  a.layers.push_back(LayerSpec::Dropout(0.2));
  a.layers.push_back(LayerSpec::Dense(2));
  a.layers.push_back(LayerSpec::Softmax());
  return a;
}

// Activations and per-layer scratch kept between forward and backward.
template <typename T>
struct Tape {
  const std::vector<PlannedLayer>* plan = nullptr;
  std::size_t batch = 0;
  std::vector<std::vector<T>> acts;   // acts[i] = output of layer i
  std::vector<std::vector<T>> cols;   // im2col buffer of conv layers
  std::vector<std::vector<T>> masks;  // scaled dropout masks
  const T* input = nullptr;

  const T* layer_input(std::size_t i) const { return i == 0 ? input : acts[i - 1].data(); }
};

template <typename T>
void Im2Col(const T* in, std::size_t batch, const Shape& s, std::vector<T>& col) {
  const std::size_t k = 9 * s.c;
  col.assign(batch * s.h * s.w * k, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t y = 0; y < s.h; ++y) {
      for (std::size_t x = 0; x < s.w; ++x) {
        T* dst = col.data() + ((b * s.h + y) * s.w + x) * k;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(s.h)) continue;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(s.w)) continue;
            const T* src = in + ((b * s.h + static_cast<std::size_t>(yy)) * s.w +
                                 static_cast<std::size_t>(xx)) * s.c;
            std::copy_n(src, s.c, dst + (ky * 3 + kx) * s.c);
          }
        }
      }
    }
  }
}

template <typename T>
void Col2Im(const std::vector<T>& dcol, std::size_t batch, const Shape& s, std::vector<T>& din) {
  const std::size_t k = 9 * s.c;
  din.assign(batch * s.size(), T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t y = 0; y < s.h; ++y) {
      for (std::size_t x = 0; x < s.w; ++x) {
        const T* src = dcol.data() + ((b * s.h + y) * s.w + x) * k;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(s.h)) continue;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(s.w)) continue;
            T* dst = din.data() + ((b * s.h + static_cast<std::size_t>(yy)) * s.w +
                                   static_cast<std::size_t>(xx)) * s.c;
            const T* g = src + (ky * 3 + kx) * s.c;
            for (std::size_t c = 0; c < s.c; ++c) dst[c] += g[c];
          }
        }
      }
    }
  }
}

template <typename T>
void RunForward(const BasicModel<T>& model, const std::vector<PlannedLayer>& plan,
                const BasicTensor4<T>& batch, RunMode mode, Tape<T>& tape) {
  const Architecture& arch = model.arch;
  if (batch.dims[1] != arch.input[0] || batch.dims[2] != arch.input[1] ||
      batch.dims[3] != arch.input[2] || batch.data.size() != batch.batch() * arch.input_size()) {
    throw Error(ErrorCode::kShapeMismatch, "batch shape does not match '" + arch.arch_id + "' input");
  }
  if (batch.batch() == 0) throw Error(ErrorCode::kShapeMismatch, "empty batch");
  if (mode.training && mode.rng == nullptr) {
    throw Error(ErrorCode::kInvalidConfig, "training mode needs a random stream");
  }
  const std::size_t n = batch.batch();
  tape.plan = &plan;
  tape.batch = n;
  tape.input = batch.data.data();
  tape.acts.resize(plan.size());
  tape.cols.resize(plan.size());
  tape.masks.resize(plan.size());

  for (std::size_t i = 0; i < plan.size(); ++i) {
    const PlannedLayer& L = plan[i];
    const T* in = tape.layer_input(i);
    std::vector<T>& out = tape.acts[i];
    const std::size_t in_size = n * L.in.size();
    out.resize(n * L.out.size());
    switch (L.spec.kind) {
      case LayerKind::kConv3x3: {
        Im2Col(in, n, L.in, tape.cols[i]);
        const auto& w = model.params[static_cast<std::size_t>(L.weight)].data;
        const auto& b = model.params[static_cast<std::size_t>(L.bias)].data;
        const std::size_t rows = n * L.in.h * L.in.w, k = 9 * L.in.c, o = L.out.c;
        MapMat<T> y(out.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(o));
        y.noalias() = ConstMapMat<T>(tape.cols[i].data(), static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(k)) *
                      ConstMapMat<T>(w.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(o));
        y.rowwise() += ConstMapRowVec<T>(b.data(), static_cast<Eigen::Index>(o));
        break;
      }
      case LayerKind::kDense: {
        const auto& w = model.params[static_cast<std::size_t>(L.weight)].data;
        const auto& b = model.params[static_cast<std::size_t>(L.bias)].data;
        const std::size_t din = L.in.size(), dout = L.out.c;
        MapMat<T> y(out.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dout));
        y.noalias() = ConstMapMat<T>(in, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(din)) *
                      ConstMapMat<T>(w.data(), static_cast<Eigen::Index>(din),
                                     static_cast<Eigen::Index>(dout));
        y.rowwise() += ConstMapRowVec<T>(b.data(), static_cast<Eigen::Index>(dout));
        break;
      }
      case LayerKind::kAvgPool2x2: {
        const Shape& s = L.in;
        const std::size_t oh = L.out.h, ow = L.out.w, c = s.c;
        for (std::size_t bi = 0; bi < n; ++bi) {
          for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
              const T* p00 = in + ((bi * s.h + 2 * y) * s.w + 2 * x) * c;
              const T* p01 = p00 + c;
              const T* p10 = p00 + s.w * c;
              const T* p11 = p10 + c;
              T* dst = out.data() + ((bi * oh + y) * ow + x) * c;
              for (std::size_t ch = 0; ch < c; ++ch) {
                dst[ch] = T(0.25) * (p00[ch] + p01[ch] + p10[ch] + p11[ch]);
              }
            }
          }
        }
        break;
      }
      case LayerKind::kReLU:
        for (std::size_t j = 0; j < in_size; ++j) out[j] = in[j] > T(0) ? in[j] : T(0);
        break;
      case LayerKind::kDropout: {
        if (!mode.training || L.spec.rate == 0.0) {
          std::copy_n(in, in_size, out.data());
          tape.masks[i].clear();
          break;
        }
        auto& mask = tape.masks[i];
        mask.resize(in_size);
        const T keep_scale = T(1.0 / (1.0 - L.spec.rate));
        for (std::size_t j = 0; j < in_size; ++j) {
          mask[j] = mode.rng->Uniform() < L.spec.rate ? T(0) : keep_scale;
          out[j] = in[j] * mask[j];
        }
        break;
      }
      case LayerKind::kFlatten:
        std::copy_n(in, in_size, out.data());
        break;
      case LayerKind::kSoftmax: {
        const std::size_t c = L.in.c;
        for (std::size_t bi = 0; bi < n; ++bi) {
          const T* z = in + bi * c;
          T* p = out.data() + bi * c;
          const T zmax = *std::max_element(z, z + c);
          T sum = 0;
          for (std::size_t j = 0; j < c; ++j) {
            p[j] = std::exp(z[j] - zmax);
            sum += p[j];
          }
          for (std::size_t j = 0; j < c; ++j) p[j] /= sum;
        }
        break;
      }
    }
  }
}

template <typename T>
ProbMatrix<T> ToProbs(const Tape<T>& tape, std::size_t classes) {
  ProbMatrix<T> probs;
  probs.rows = tape.batch;
  probs.cols = classes;
  probs.values = tape.acts.back();
  return probs;
}

}  // namespace

std::string_view LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv3x3: return "Conv3x3";
    case LayerKind::kAvgPool2x2: return "AvgPool2x2";
    case LayerKind::kReLU: return "ReLU";
    case LayerKind::kDropout: return "Dropout";
    case LayerKind::kFlatten: return "Flatten";
    case LayerKind::kDense: return "Dense";
    case LayerKind::kSoftmax: return "Softmax";
  }
  return "?";
}

std::size_t Architecture::num_classes() const {
  const auto plan = Plan(*this);
  return plan.back().out.c;
}

void Architecture::Validate() const { (void)Plan(*this); }

Architecture ArchitectureFor(std::string_view arch_id) {
  constexpr std::string_view kCnn = "cnn-baseline";
  constexpr std::string_view kMlp = "mlp-head:";
  if (arch_id == kCnn) return CnnBaseline(std::string(arch_id), 64, 64);
  if (arch_id.starts_with(kCnn) && arch_id.size() > kCnn.size() && arch_id[kCnn.size()] == ':') {
    const std::string_view dims = arch_id.substr(kCnn.size() + 1);
    const auto x = dims.find('x');
    if (x == std::string_view::npos) {
      throw Error(ErrorCode::kUnknownArch, "expected cnn-baseline:<H>x<W>, got '" + std::string(arch_id) + "'");
    }
    const std::size_t h = ParseDim(dims.substr(0, x), arch_id);
    const std::size_t w = ParseDim(dims.substr(x + 1), arch_id);
    if (h % 8 != 0 || w % 8 != 0) {
      throw Error(ErrorCode::kUnknownArch, "cnn-baseline input must be a multiple of 8");
    }
    return CnnBaseline(std::string(arch_id), h, w);
  }
  if (arch_id.starts_with(kMlp)) {
    const std::size_t d = ParseDim(arch_id.substr(kMlp.size()), arch_id);
    Architecture a;
    a.arch_id = std::string(arch_id);
    a.input = {1, 1, d};
    a.layers = {LayerSpec::Dense(128), LayerSpec::ReLU(), LayerSpec::Dense(2), LayerSpec::Softmax()};
    return a;
  }
  throw Error(ErrorCode::kUnknownArch, "unknown architecture '" + std::string(arch_id) + "'");
}

std::vector<BasicParam<float>> ParameterLayout(const Architecture& arch) {
  const auto plan = Plan(arch);
  std::vector<BasicParam<float>> layout;
  int conv = 0, dense = 0;
  for (const PlannedLayer& L : plan) {
    if (L.spec.kind == LayerKind::kConv3x3) {
      const std::string name = "conv" + std::to_string(++conv);
      layout.push_back({name + ".weight", {3, 3, L.in.c, L.out.c}, {}});
      layout.push_back({name + ".bias", {L.out.c}, {}});
    } else if (L.spec.kind == LayerKind::kDense) {
      const std::string name = "dense" + std::to_string(++dense);
      layout.push_back({name + ".weight", {L.in.size(), L.out.c}, {}});
      layout.push_back({name + ".bias", {L.out.c}, {}});
    }
  }
  return layout;
}

template <typename T>
BasicModel<T> InitModel(const Architecture& arch, std::uint64_t seed) {
  BasicModel<T> model;
  model.arch = arch;
  model.seed = seed;
  Rng rng(seed);
  for (const auto& p : ParameterLayout(arch)) {
    std::size_t count = 1;
    for (std::size_t d : p.dims) count *= d;
    BasicParam<T> param{p.name, p.dims, std::vector<T>(count, T(0))};
    if (p.dims.size() > 1) {
      // fan_in = every dim but the last (3*3*in for conv, in for dense).
      const std::size_t fan_in = count / p.dims.back();
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (T& v : param.data) v = static_cast<T>(rng.Uniform(-bound, bound));
    }
    model.params.push_back(std::move(param));
  }
  return model;
}

Model InitModel(std::string_view arch_id, std::uint64_t seed) {
  return InitModel<float>(ArchitectureFor(arch_id), seed);
}

template <typename T>
ProbMatrix<T> Forward(const BasicModel<T>& model, const BasicTensor4<T>& batch, RunMode mode) {
  const auto plan = Plan(model.arch);
  Tape<T> tape;
  RunForward(model, plan, batch, mode, tape);
  return ToProbs(tape, plan.back().out.c);
}

template <typename T>
LossAndGradients<T> LossAndGrads(const BasicModel<T>& model, const BasicTensor4<T>& batch,
                                 std::span<const int> labels, RunMode mode,
                                 std::span<const double> class_weights) {
  const auto plan = Plan(model.arch);
  const std::size_t classes = plan.back().out.c;
  if (labels.size() != batch.batch()) {
    throw Error(ErrorCode::kShapeMismatch, "label count differs from batch size");
  }
  if (!class_weights.empty() && class_weights.size() != classes) {
    throw Error(ErrorCode::kShapeMismatch, "one class weight per class expected");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw Error(ErrorCode::kLabelOutOfRange, "label " + std::to_string(y));
    }
  }

  Tape<T> tape;
  RunForward(model, plan, batch, mode, tape);
  const std::size_t n = batch.batch();

  LossAndGradients<T> result;
  result.probs = ToProbs(tape, classes);
  result.grads.resize(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    result.grads[i].assign(model.params[i].data.size(), T(0));
  }

  // Softmax + cross-entropy, differentiated with respect to the logits.
  const std::size_t last = plan.size() - 1;
  const T* logits = tape.layer_input(last);
  std::vector<T> grad(n * classes);
  double loss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const T* z = logits + b * classes;
    const auto y = static_cast<std::size_t>(labels[b]);
    const double w = class_weights.empty() ? 1.0 : class_weights[y];
    const T zmax = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(static_cast<double>(z[c] - zmax));
    const double log_p = static_cast<double>(z[y] - zmax) - std::log(sum);
    loss += -w * log_p;
    const double scale = w / static_cast<double>(n);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = result.probs(b, c);
      grad[b * classes + c] = static_cast<T>(scale * (p - (c == y ? 1.0 : 0.0)));
    }
  }
  result.loss = static_cast<T>(loss / static_cast<double>(n));

  std::vector<T> grad_in;
  for (std::size_t li = last; li-- > 0;) {
    const PlannedLayer& L = plan[li];
    const T* in = tape.layer_input(li);
    const bool need_input_grad = li > 0;
    grad_in.clear();
    switch (L.spec.kind) {
      case LayerKind::kConv3x3: {
        const std::size_t rows = n * L.in.h * L.in.w, k = 9 * L.in.c, o = L.out.c;
        const auto ri = static_cast<Eigen::Index>(rows), ki = static_cast<Eigen::Index>(k),
                   oi = static_cast<Eigen::Index>(o);
        ConstMapMat<T> dy(grad.data(), ri, oi);
        ConstMapMat<T> col(tape.cols[li].data(), ri, ki);
        MapMat<T>(result.grads[static_cast<std::size_t>(L.weight)].data(), ki, oi).noalias() =
            col.transpose() * dy;
        SumRows(grad.data(), rows, o, result.grads[static_cast<std::size_t>(L.bias)]);
        if (need_input_grad) {
          std::vector<T> dcol(rows * k);
          const auto& w = model.params[static_cast<std::size_t>(L.weight)].data;
          MapMat<T>(dcol.data(), ri, ki).noalias() = dy * ConstMapMat<T>(w.data(), ki, oi).transpose();
          Col2Im(dcol, n, L.in, grad_in);
        }
        break;
      }
      case LayerKind::kDense: {
        const std::size_t din = L.in.size(), dout = L.out.c;
        const auto ni = static_cast<Eigen::Index>(n), di = static_cast<Eigen::Index>(din),
                   oi = static_cast<Eigen::Index>(dout);
        ConstMapMat<T> dy(grad.data(), ni, oi);
        ConstMapMat<T> x(in, ni, di);
        MapMat<T>(result.grads[static_cast<std::size_t>(L.weight)].data(), di, oi).noalias() =
            x.transpose() * dy;
        SumRows(grad.data(), n, dout, result.grads[static_cast<std::size_t>(L.bias)]);
        if (need_input_grad) {
          grad_in.resize(n * din);
          const auto& w = model.params[static_cast<std::size_t>(L.weight)].data;
          MapMat<T>(grad_in.data(), ni, di).noalias() = dy * ConstMapMat<T>(w.data(), di, oi).transpose();
        }
        break;
      }
      case LayerKind::kAvgPool2x2: {
        if (!need_input_grad) break;
        const Shape& s = L.in;
        const std::size_t oh = L.out.h, ow = L.out.w, c = s.c;
        grad_in.assign(n * s.size(), T(0));
        for (std::size_t bi = 0; bi < n; ++bi) {
          for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
              const T* g = grad.data() + ((bi * oh + y) * ow + x) * c;
              T* p00 = grad_in.data() + ((bi * s.h + 2 * y) * s.w + 2 * x) * c;
              T* p01 = p00 + c;
              T* p10 = p00 + s.w * c;
              T* p11 = p10 + c;
              for (std::size_t ch = 0; ch < c; ++ch) {
                const T q = T(0.25) * g[ch];
                p00[ch] = q;
                p01[ch] = q;
                p10[ch] = q;
                p11[ch] = q;
              }
            }
          }
        }
        break;
      }
      case LayerKind::kReLU: {
        if (!need_input_grad) break;
        grad_in.resize(grad.size());
        for (std::size_t j = 0; j < grad.size(); ++j) grad_in[j] = in[j] > T(0) ? grad[j] : T(0);
        break;
      }
      case LayerKind::kDropout: {
        if (!need_input_grad) break;
        grad_in = grad;
        const auto& mask = tape.masks[li];
        if (!mask.empty()) {
          for (std::size_t j = 0; j < grad_in.size(); ++j) grad_in[j] *= mask[j];
        }
        break;
      }
      case LayerKind::kFlatten:
        if (need_input_grad) grad_in = grad;
        break;
      case LayerKind::kSoftmax:
        break;  // only ever last; handled with the loss above
    }
    grad.swap(grad_in);
  }
  return result;
}

template <typename T>
AdamState<T> AdamState<T>::ForModel(const BasicModel<T>& model, double lr) {
  AdamState<T> state;
  state.lr = lr;
  for (const auto& p : model.params) {
    state.m.emplace_back(p.data.size(), T(0));
    state.v.emplace_back(p.data.size(), T(0));
  }
  return state;
}

template <typename T>
void AdamStep(BasicModel<T>& model, const std::vector<std::vector<T>>& grads, AdamState<T>& state) {
  if (grads.size() != model.params.size() || state.m.size() != model.params.size() ||
      state.v.size() != model.params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "Adam: parameter list mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const std::size_t size = model.params[i].data.size();
    if (grads[i].size() != size || state.m[i].size() != size || state.v[i].size() != size) {
      throw Error(ErrorCode::kShapeMismatch, "Adam: shape mismatch for " + model.params[i].name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& w = model.params[i].data;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / correction1;
      const double v_hat = vj / correction2;
      w[j] = static_cast<T>(w[j] - state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

#define ADFD_INSTANTIATE(T)                                                                    \
  template BasicModel<T> InitModel<T>(const Architecture&, std::uint64_t);                     \
  template ProbMatrix<T> Forward<T>(const BasicModel<T>&, const BasicTensor4<T>&, RunMode);    \
  template LossAndGradients<T> LossAndGrads<T>(const BasicModel<T>&, const BasicTensor4<T>&,   \
                                               std::span<const int>, RunMode,                  \
                                               std::span<const double>);                       \
  template struct AdamState<T>;                                                                \
  template void AdamStep<T>(BasicModel<T>&, const std::vector<std::vector<T>>&, AdamState<T>&);

ADFD_INSTANTIATE(float)
ADFD_INSTANTIATE(double)

#undef ADFD_INSTANTIATE

}  // namespace adfd
