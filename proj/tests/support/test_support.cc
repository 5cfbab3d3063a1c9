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

#include "test_support.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>

#include "adfd/fft.h"

namespace adfd::testing {
namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = base / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<char> ReadBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Segment MakeSegment(std::vector<float> samples, std::string utt_id) {
  Segment s;
  s.utt_id = std::move(utt_id);
  s.samples = std::move(samples);
  return s;
}

Segment ToneSegment(double hz, double amplitude, double phase) {
  std::vector<float> x(kSegmentSamples);
  for (std::size_t n = 0; n < x.size(); ++n) {
    x[n] = static_cast<float>(amplitude * std::sin(2.0 * kPi * hz * n / kSampleRateHz + phase));
  }
  return MakeSegment(std::move(x), "tone");
}

Segment NoiseSegment(Rng& rng, double scale) {
  std::vector<float> x(kSegmentSamples);
  for (float& v : x) v = static_cast<float>(std::clamp(scale * rng.Gaussian(), -1.0, 1.0));
  return MakeSegment(std::move(x), "noise");
}

namespace oracle {

Matrix DftPower(const Segment& segment) {
  const auto& x = segment.samples;
  const long n = static_cast<long>(x.size());
  const long win = 1024, hop = 512, pad = 512;
  Matrix out(513, 64);
  std::vector<double> frame(win);
  for (long t = 0; t < 63; ++t) {
    for (long i = 0; i < win; ++i) {
      long idx = t * hop + i - pad;
      if (idx < 0) idx = -idx;
      if (idx >= n) idx = 2 * (n - 1) - idx;
      const double hann = 0.5 - 0.5 * std::cos(2.0 * kPi * i / win);
      frame[i] = hann * x[idx];
    }
    for (long k = 0; k <= win / 2; ++k) {
      double re = 0.0, im = 0.0;
      for (long i = 0; i < win; ++i) {
        const double a = -2.0 * kPi * static_cast<double>((k * i) % win) / win;
        re += frame[i] * std::cos(a);
        im += frame[i] * std::sin(a);
      }
      out(k, t) = static_cast<float>(re * re + im * im);
    }
  }
  for (long k = 0; k <= win / 2; ++k) out(k, 63) = out(k, 62);
  return out;
}

std::vector<double> Dct(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::cos(kPi * (i + 0.5) * k / n);
    y[k] = acc * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
  }
  return y;
}

std::vector<double> Delta(std::span<const double> c) {
  const long n = static_cast<long>(c.size());
  auto at = [&](long t) { return c[std::clamp(t, 0L, n - 1)]; };
  std::vector<double> d(c.size());
  for (long t = 0; t < n; ++t) {
    d[t] = (1.0 * (at(t + 1) - at(t - 1)) + 2.0 * (at(t + 2) - at(t - 2))) / (2.0 * (1.0 + 4.0));
  }
  return d;
}

double CqtBin(std::span<const float> x, double hz, std::size_t length, std::size_t center) {
  std::complex<double> acc{};
  const long start = static_cast<long>(center) - static_cast<long>(length / 2);
  for (std::size_t i = 0; i < length; ++i) {
    const long idx = start + static_cast<long>(i);
    if (idx < 0 || idx >= static_cast<long>(x.size())) continue;
    const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * i / length);
    acc += static_cast<double>(x[idx]) * w * std::polar(1.0, -2.0 * kPi * hz * i / kSampleRateHz);
  }
  return std::abs(acc) / static_cast<double>(length);
}

double MorletMagnitude(std::span<const float> x, double hz, std::size_t at) {
  const double w0 = 6.0;
  // Scale in samples; the wavelet's Fourier transform is
  // 2 exp(-(s w - w0)^2 / 2) on positive frequencies.
  const double s = w0 / (2.0 * kPi * hz) * kSampleRateHz;
  const long reach = static_cast<long>(std::ceil(6.0 * s));
  const double norm = 2.0 / (s * std::sqrt(2.0 * kPi));
  std::complex<double> acc{};
  for (long j = -reach; j <= reach; ++j) {
    const long idx = static_cast<long>(at) - j;
    if (idx < 0 || idx >= static_cast<long>(x.size())) continue;
    const double g = norm * std::exp(-0.5 * (j / s) * (j / s));
    acc += static_cast<double>(x[idx]) * g * std::polar(1.0, w0 * j / s);
  }
  return std::abs(acc);
}

EerResult Eer(std::span<const double> bonafide, std::span<const double> spoof) {
  std::vector<double> thresholds(bonafide.begin(), bonafide.end());
  thresholds.insert(thresholds.end(), spoof.begin(), spoof.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  struct Point {
    double t, far, frr;
  };
  std::vector<Point> pts;
  for (double t : thresholds) {
    double accepted = 0, rejected = 0;
    for (double s : spoof) accepted += s >= t ? 1 : 0;
    for (double b : bonafide) rejected += b < t ? 1 : 0;
    pts.push_back({t, accepted / spoof.size(), rejected / bonafide.size()});
  }
  // Beyond the largest score nothing is accepted.
  pts.push_back({thresholds.back(), 0.0, 1.0});

  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double gap = pts[i].far - pts[i].frr;
    if (gap > 0) continue;
    if (gap == 0) return {pts[i].far, pts[i].t};
    const double prev_gap = pts[i - 1].far - pts[i - 1].frr;
    const double w = prev_gap / (prev_gap - gap);
    return {pts[i - 1].far + w * (pts[i].far - pts[i - 1].far),
            pts[i - 1].t + w * (pts[i].t - pts[i - 1].t)};
  }
  throw std::logic_error("no crossing");
}

double PairAuc(std::span<const double> bonafide, std::span<const double> spoof) {
  double wins = 0.0;
  for (double b : bonafide) {
    for (double s : spoof) wins += b > s ? 1.0 : (b == s ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(bonafide.size()) * static_cast<double>(spoof.size()));
}

}  // namespace oracle

namespace {

constexpr std::size_t kSynthFft = 32768;

std::vector<double> PinkNoise(Rng& rng, std::size_t n, double rms) {
  static const Fft plan(kSynthFft);
  std::vector<std::complex<double>> buf(kSynthFft);
  for (auto& v : buf) v = rng.Gaussian();
  plan.Forward(buf);
  buf[0] = 0.0;
  for (std::size_t k = 1; k < kSynthFft; ++k) {
    const std::size_t f = std::min(k, kSynthFft - k);
    buf[k] /= std::sqrt(static_cast<double>(f));
  }
  plan.Inverse(buf);
  std::vector<double> out(n);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = buf[i].real();
    energy += out[i] * out[i];
  }
  const double scale = rms / std::sqrt(energy / static_cast<double>(n));
  for (double& v : out) v *= scale;
  return out;
}

void QuantizeMagnitudes(std::vector<double>& x) {
  static const Fft plan(kSynthFft);
  std::vector<std::complex<double>> buf(kSynthFft);
  std::copy(x.begin(), x.end(), buf.begin());
  plan.Forward(buf);
  double peak = 0.0;
  for (const auto& v : buf) peak = std::max(peak, std::abs(v));
  for (auto& v : buf) {
    const double level = std::round(std::abs(v) / peak * 15.0) / 15.0 * peak;
    v = std::polar(level, std::arg(v));
  }
  plan.Inverse(buf);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = buf[i].real();
}

}  // namespace

SyntheticClip SynthesizeClip(std::uint64_t seed, std::size_t index, int label) {
  Rng rng = Rng::ForStream(seed, index);
  const double f0 = rng.Uniform(100.0, 400.0);
  std::vector<int> harmonics;
  while (harmonics.size() < 3) {
    const int h = 1 + static_cast<int>(rng.Below(10));
    if (std::find(harmonics.begin(), harmonics.end(), h) == harmonics.end()) harmonics.push_back(h);
  }
  const std::size_t inverted = rng.Below(3);
  std::vector<double> x = PinkNoise(rng, kSegmentSamples, 0.01);
  for (std::size_t h = 0; h < 3; ++h) {
    const double amp = rng.Uniform(0.2, 0.5);
    double phase = rng.Uniform(0.0, 2.0 * kPi);
    if (label == kSpoof && h == inverted) phase += kPi;
    const double hz = f0 * harmonics[h];
    for (std::size_t n = 0; n < x.size(); ++n) {
      x[n] += amp * std::sin(2.0 * kPi * hz * n / kSampleRateHz + phase);
    }
  }
  if (label == kSpoof) QuantizeMagnitudes(x);

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  SyntheticClip clip;
  clip.label = label;
  clip.utt_id = std::string(label == kBonafide ? "SYN_B_" : "SYN_S_") + std::to_string(index);
  clip.samples.resize(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) clip.samples[n] = static_cast<float>(0.9 * x[n] / peak);
  return clip;
}

SyntheticSplit MakeSyntheticSplit(std::uint64_t seed, std::size_t per_class) {
  std::vector<SyntheticClip> all;
  all.reserve(2 * per_class);
  for (std::size_t i = 0; i < per_class; ++i) {
    all.push_back(SynthesizeClip(seed, 2 * i, kBonafide));
    all.push_back(SynthesizeClip(seed, 2 * i + 1, kSpoof));
  }
  const std::size_t n_train = all.size() * 5 / 8;
  const std::size_t n_dev = all.size() / 8;
  SyntheticSplit split;
  split.train.assign(std::make_move_iterator(all.begin()),
                     std::make_move_iterator(all.begin() + n_train));
  split.dev.assign(std::make_move_iterator(all.begin() + n_train),
                   std::make_move_iterator(all.begin() + n_train + n_dev));
  split.eval.assign(std::make_move_iterator(all.begin() + n_train + n_dev),
                    std::make_move_iterator(all.end()));
  return split;
}

std::filesystem::path WriteSyntheticCorpus(const std::filesystem::path& dir,
                                           const std::string& name,
                                           std::span<const SyntheticClip> clips) {
  std::filesystem::create_directories(dir / "wav");
  const auto protocol = dir / (name + ".txt");
  std::ofstream out(protocol);
  for (const auto& clip : clips) {
    WriteWav(dir / "wav" / (clip.utt_id + ".wav"), clip.samples, kSampleRateHz,
             WavEncoding::kFloat32);
    out << "SYN " << clip.utt_id << (clip.label == kBonafide ? " - - bonafide\n" : " - A01 spoof\n");
  }
  if (!out) throw std::runtime_error("cannot write " + protocol.string());
  return protocol;
}

std::vector<double> LinearProbeScores(const std::vector<std::vector<float>>& train_x,
                                      const std::vector<int>& train_y,
                                      const std::vector<std::vector<float>>& test_x,
                                      std::size_t iterations, double lr, double l2) {
  const std::size_t n = train_x.size();
  const std::size_t d = train_x.front().size();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto& row : train_x) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (const auto& row : train_x) {
    for (std::size_t j = 0; j < d; ++j) sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  }
  for (double& s : sd) s = std::max(std::sqrt(s / static_cast<double>(n)), 1e-6);
  auto standardize = [&](const std::vector<float>& row) {
    std::vector<double> z(d);
    for (std::size_t j = 0; j < d; ++j) z[j] = (row[j] - mean[j]) / sd[j];
    return z;
  };
  std::vector<std::vector<double>> z;
  for (const auto& row : train_x) z.push_back(standardize(row));

  // Model: P(spoof) = sigmoid(w.z + b).
  std::vector<double> w(d, 0.0), grad(d);
  double b = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double logit = b;
      for (std::size_t j = 0; j < d; ++j) logit += w[j] * z[i][j];
      const double err = 1.0 / (1.0 + std::exp(-logit)) - (train_y[i] == kSpoof ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) grad[j] += err * z[i][j];
      grad_b += err;
    }
    const double step = lr / static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) w[j] -= step * (grad[j] / n + l2 * w[j]);
    b -= lr * grad_b / static_cast<double>(n);
  }

  std::vector<double> scores;
  for (const auto& row : test_x) {
    const auto zt = standardize(row);
    double logit = b;
    for (std::size_t j = 0; j < d; ++j) logit += w[j] * zt[j];
    scores.push_back(1.0 / (1.0 + std::exp(logit)));
  }
  return scores;
}

ReferencePass ReferenceForward(const BasicModel<double>& model, const BasicTensor4<double>& batch,
                               const std::uint64_t* dropout_seed) {
  std::optional<Rng> rng;
  if (dropout_seed) rng.emplace(*dropout_seed);
  const std::size_t n = batch.batch();
  std::size_t h = model.arch.input[0], w = model.arch.input[1], c = model.arch.input[2];
  std::vector<double> x = batch.data;
  std::size_t param = 0;
  ReferencePass pass;
  for (const LayerSpec& layer : model.arch.layers) {
    switch (layer.kind) {
      case LayerKind::kConv3x3: {
        const auto& wt = model.params[param++].data;  // [ky][kx][ci][co]
        const auto& bias = model.params[param++].data;
        const std::size_t co = layer.units;
        std::vector<double> y(n * h * w * co);
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j)
              for (std::size_t o = 0; o < co; ++o) {
                double acc = bias[o];
                for (long ky = -1; ky <= 1; ++ky)
                  for (long kx = -1; kx <= 1; ++kx) {
                    const long ii = static_cast<long>(i) + ky, jj = static_cast<long>(j) + kx;
                    if (ii < 0 || jj < 0 || ii >= static_cast<long>(h) || jj >= static_cast<long>(w)) continue;
                    for (std::size_t ci = 0; ci < c; ++ci) {
                      acc += x[((b * h + ii) * w + jj) * c + ci] *
                             wt[(((ky + 1) * 3 + (kx + 1)) * c + ci) * co + o];
                    }
                  }
                y[((b * h + i) * w + j) * co + o] = acc;
              }
        x = std::move(y);
        c = co;
        break;
      }
      case LayerKind::kAvgPool2x2: {
        std::vector<double> y(n * (h / 2) * (w / 2) * c);
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t i = 0; i < h / 2; ++i)
            for (std::size_t j = 0; j < w / 2; ++j)
              for (std::size_t ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::size_t di = 0; di < 2; ++di)
                  for (std::size_t dj = 0; dj < 2; ++dj) acc += x[((b * h + 2 * i + di) * w + 2 * j + dj) * c + ch];
                y[((b * (h / 2) + i) * (w / 2) + j) * c + ch] = acc / 4.0;
              }
        x = std::move(y);
        h /= 2;
        w /= 2;
        break;
      }
      case LayerKind::kReLU:
        for (double& v : x) {
          pass.relu_active.push_back(v > 0.0);
          v = std::max(v, 0.0);
        }
        break;
      case LayerKind::kDropout:
        if (rng && layer.rate > 0.0) {
          for (double& v : x) v = rng->Uniform() < layer.rate ? 0.0 : v / (1.0 - layer.rate);
        }
        break;
      case LayerKind::kFlatten:
        c = h * w * c;
        h = w = 1;
        break;
      case LayerKind::kDense: {
        const auto& wt = model.params[param++].data;  // [in][out]
        const auto& bias = model.params[param++].data;
        const std::size_t din = h * w * c, dout = layer.units;
        std::vector<double> y(n * dout);
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t o = 0; o < dout; ++o) {
            double acc = bias[o];
            for (std::size_t i = 0; i < din; ++i) acc += x[b * din + i] * wt[i * dout + o];
            y[b * dout + o] = acc;
          }
        x = std::move(y);
        h = w = 1;
        c = dout;
        break;
      }
      case LayerKind::kSoftmax:
        for (std::size_t b = 0; b < n; ++b) {
          double* z = x.data() + b * c;
          const double top = *std::max_element(z, z + c);
          double sum = 0.0;
          for (std::size_t k = 0; k < c; ++k) sum += std::exp(z[k] - top);
          for (std::size_t k = 0; k < c; ++k) z[k] = std::exp(z[k] - top) / sum;
        }
        break;
    }
  }
  pass.probs = std::move(x);
  return pass;
}

GradCheckResult CheckGradients(const BasicModel<double>& model, const BasicTensor4<double>& batch,
                               std::span<const int> labels, std::uint64_t dropout_seed,
                               double eps, std::size_t stride,
                               std::span<const double> class_weights) {
  auto loss_at = [&](const BasicModel<double>& m) {
    Rng rng(dropout_seed);
    const auto probs = Forward(m, batch, RunMode::Train(rng));
    double loss = 0.0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
      const auto y = static_cast<std::size_t>(labels[b]);
      const double w = class_weights.empty() ? 1.0 : class_weights[y];
      loss -= w * std::log(probs(b, y));
    }
    return loss / static_cast<double>(labels.size());
  };
  Rng rng(dropout_seed);
  const auto analytic = LossAndGrads(model, batch, labels, RunMode::Train(rng), class_weights);
  const auto base_pattern = ReferenceForward(model, batch, &dropout_seed).relu_active;

  GradCheckResult result;
  BasicModel<double> probe = model;
  for (std::size_t p = 0; p < probe.params.size(); ++p) {
    auto& data = probe.params[p].data;
    for (std::size_t i = 0;; i += stride) {
      const std::size_t idx = std::min(i, data.size() - 1);
      const double saved = data[idx];
      data[idx] = saved + eps;
      const double up = loss_at(probe);
      const bool flip_up = ReferenceForward(probe, batch, &dropout_seed).relu_active != base_pattern;
      data[idx] = saved - eps;
      const double down = loss_at(probe);
      const bool flip_down = ReferenceForward(probe, batch, &dropout_seed).relu_active != base_pattern;
      data[idx] = saved;
      ++result.checked;
      if (flip_up || flip_down) {
        ++result.kinked;
      } else {
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic.grads[p][idx];
        const double rel =
            std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradFloor});
        if (rel >= result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst = probe.params[p].name + "[" + std::to_string(idx) + "] analytic " +
                         FormatScore(a) + " numeric " + FormatScore(numeric);
        }
      }
      if (idx == data.size() - 1) break;
    }
  }
  return result;
}

BasicTensor4<double> RandomBatch(const Architecture& arch, std::size_t batch, Rng& rng) {
  BasicTensor4<double> t(batch, arch.input[0], arch.input[1], arch.input[2]);
  for (double& v : t.data) v = rng.Gaussian();
  return t;
}

}  // namespace adfd::testing
