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

#ifndef ADFD_NN_H_
#define ADFD_NN_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adfd/rng.h"

namespace adfd {

// Batch of feature maps, dims = (batch, height, width, channels), row-major
// in that order.
template <typename T>
struct BasicTensor4 {
  std::array<std::size_t, 4> dims{0, 0, 0, 0};
  std::vector<T> data;

  BasicTensor4() = default;
  BasicTensor4(std::size_t batch, std::size_t height, std::size_t width, std::size_t channels)
      : dims{batch, height, width, channels}, data(batch * height * width * channels) {}

  std::size_t batch() const { return dims[0]; }
  std::size_t sample_size() const { return dims[1] * dims[2] * dims[3]; }
  std::span<T> sample(std::size_t b) { return {data.data() + b * sample_size(), sample_size()}; }
  std::span<const T> sample(std::size_t b) const {
    return {data.data() + b * sample_size(), sample_size()};
  }
};
using Tensor4 = BasicTensor4<float>;

enum class LayerKind { kConv3x3, kAvgPool2x2, kReLU, kDropout, kFlatten, kDense, kSoftmax };

std::string_view LayerKindName(LayerKind kind);

// Conv3x3: stride 1, zero "same" padding, `units` output channels.
// AvgPool2x2: stride 2. Dense: `units` outputs. Dropout: `rate` in [0, 1).
struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  std::size_t units = 0;
  double rate = 0.0;

  static LayerSpec Conv3x3(std::size_t out_channels) { return {LayerKind::kConv3x3, out_channels, 0.0}; }
  static LayerSpec AvgPool2x2() { return {LayerKind::kAvgPool2x2, 0, 0.0}; }
  static LayerSpec ReLU() { return {LayerKind::kReLU, 0, 0.0}; }
  static LayerSpec Dropout(double rate) { return {LayerKind::kDropout, 0, rate}; }
  static LayerSpec Flatten() { return {LayerKind::kFlatten, 0, 0.0}; }
  static LayerSpec Dense(std::size_t out_dim) { return {LayerKind::kDense, out_dim, 0.0}; }
  static LayerSpec Softmax() { return {LayerKind::kSoftmax, 0, 0.0}; }
};

// Per-sample input shape plus layer stack. The stack must end in Softmax.
struct Architecture {
  std::string arch_id;
  std::array<std::size_t, 3> input{0, 0, 0};  // height, width, channels
  std::vector<LayerSpec> layers;

  std::size_t input_size() const { return input[0] * input[1] * input[2]; }
  std::size_t num_classes() const;
  // Throws Error(kShapeMismatch) on an inconsistent stack.
  void Validate() const;
};

// Known identifiers:
//   "cnn-baseline"          64x64x3 input,
//                           3 x {Conv3x3(32/64/128), ReLU, AvgPool2x2, Dropout(0.2)},
//                           Flatten, Dense(256), ReLU, Dropout(0.2), Dense(2), Softmax
//   "cnn-baseline:<H>x<W>"  same stack on an H x W x 3 input (H, W multiples of 8)
//   "mlp-head:<D>"          D-dim input, Dense(128), ReLU, Dense(2), Softmax
// Throws Error(kUnknownArch).
Architecture ArchitectureFor(std::string_view arch_id);

template <typename T>
struct BasicParam {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<T> data;
};

// Parameters in layer order. Conv kernels are (3, 3, in, out), dense weights
// (in, out), biases (out).
template <typename T>
struct BasicModel {
  Architecture arch;
  std::uint64_t seed = 0;
  std::vector<BasicParam<T>> params;

  std::size_t ParameterCount() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.data.size();
    return n;
  }
};
using Model = BasicModel<float>;

// Expected parameter layout (names and dims) for an architecture.
std::vector<BasicParam<float>> ParameterLayout(const Architecture& arch);

// He-uniform weights (bound sqrt(6 / fan_in)) drawn in parameter order from
// Rng(seed); biases zero.
template <typename T>
BasicModel<T> InitModel(const Architecture& arch, std::uint64_t seed);
Model InitModel(std::string_view arch_id, std::uint64_t seed);

template <typename To, typename From>
BasicModel<To> CastModel(const BasicModel<From>& model) {
  BasicModel<To> out;
  out.arch = model.arch;
  out.seed = model.seed;
  out.params.reserve(model.params.size());
  for (const auto& p : model.params) {
    out.params.push_back({p.name, p.dims, std::vector<To>(p.data.begin(), p.data.end())});
  }
  return out;
}

// Eval disables dropout. Train draws dropout masks from the given stream;
// kept activations are divided by (1 - rate).
struct RunMode {
  bool training = false;
  Rng* rng = nullptr;

  static RunMode Eval() { return {}; }
  static RunMode Train(Rng& rng) { return {true, &rng}; }
};

// Row-major batch x classes matrix of softmax outputs.
template <typename T>
struct ProbMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  T operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Throws Error(kShapeMismatch) if the batch does not match the input shape.
template <typename T>
ProbMatrix<T> Forward(const BasicModel<T>& model, const BasicTensor4<T>& batch, RunMode mode);

template <typename T>
struct LossAndGradients {
  T loss = 0;
  std::vector<std::vector<T>> grads;  // parallel to model.params
  ProbMatrix<T> probs;
};

// Mean over the batch of -w[label] ln p[label] (w = 1 when class_weights is
// empty) and its exact gradient with respect to every parameter. Dropout masks
// drawn in the forward pass are reused in the backward pass.
template <typename T>
LossAndGradients<T> LossAndGrads(const BasicModel<T>& model, const BasicTensor4<T>& batch,
                                 std::span<const int> labels, RunMode mode,
                                 std::span<const double> class_weights = {});

template <typename T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  static AdamState ForModel(const BasicModel<T>& model, double lr = 1e-3);
};

// Bias-corrected Adam update. Throws Error(kShapeMismatch).
template <typename T>
void AdamStep(BasicModel<T>& model, const std::vector<std::vector<T>>& grads,
              AdamState<T>& state);

}  // namespace adfd

#endif  // ADFD_NN_H_
