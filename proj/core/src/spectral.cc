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

#include "adfd/spectral.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "adfd/error.h"
#include "adfd/fft.h"

namespace adfd {
namespace {

using Complex = std::complex<double>;

constexpr double kPi = std::numbers::pi;

constexpr double kCqtMinHz = 31.25;
constexpr double kCqtBinsPerOctave = 8.0;

constexpr double kCwtMinHz = 60.0;
constexpr double kCwtMaxHz = 7800.0;
constexpr double kMorletOmega0 = 6.0;
constexpr std::size_t kCwtFftSize = 65536;

constexpr double kGammatoneLoHz = 50.0;
constexpr double kGammatoneHiHz = 7800.0;

constexpr double kNormStdFloor = 1e-8;

constexpr std::array<std::string_view, 6> kRecipeNames = {
    "stft", "cqt", "wt", "stft-lf", "stft-mel", "stft-gam"};

// Periodic Hann, w[n] = 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> HannWindow(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

void CheckSegment(const Segment& segment) {
  if (segment.samples.size() != kSegmentSamples) {
    throw Error(ErrorCode::kShapeMismatch,
                "segment must hold " + std::to_string(kSegmentSamples) + " samples");
  }
}

void ReplicateLastFrame(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    m(r, kNumFrames - 1) = m(r, kComputedFrames - 1);
  }
}

std::string_view TransformName(Transform t) {
  switch (t) {
    case Transform::kStft: return "stft";
    case Transform::kCqt: return "cqt";
    case Transform::kWt: return "wt";
  }
  return "?";
}

std::string_view FilterName(FilterKind f) {
  switch (f) {
    case FilterKind::kNone: return "none";
    case FilterKind::kMel: return "mel";
    case FilterKind::kGammatone: return "gam";
    case FilterKind::kLinear: return "lf";
  }
  return "?";
}

struct CqtKernels {
  std::vector<std::vector<Complex>> taps;  // taps[k][n] = hann[n] e^{-i w n} / N_k
};

const CqtKernels& GetCqtKernels() {
  static const CqtKernels kernels = [] {
    CqtKernels k;
    const std::vector<double> freqs = CqtCenterFrequencies();
    k.taps.resize(freqs.size());
    for (std::size_t b = 0; b < freqs.size(); ++b) {
      const std::size_t len = CqtKernelLength(b);
      const std::vector<double> w = HannWindow(len);
      const double omega = 2.0 * kPi * freqs[b] / kSampleRateHz;
      auto& taps = k.taps[b];
      taps.resize(len);
      for (std::size_t n = 0; n < len; ++n) {
        const double phase = -omega * static_cast<double>(n);
        taps[n] = Complex(std::cos(phase), std::sin(phase)) * (w[n] / static_cast<double>(len));
      }
    }
    return k;
  }();
  return kernels;
}

const FilterBank& CachedBank(FilterKind kind) {
  static const FilterBank mel = BuildFilterBank(FilterKind::kMel);
  static const FilterBank gam = BuildFilterBank(FilterKind::kGammatone);
  static const FilterBank lin = BuildFilterBank(FilterKind::kLinear);
  switch (kind) {
    case FilterKind::kMel: return mel;
    case FilterKind::kGammatone: return gam;
    case FilterKind::kLinear: return lin;
    case FilterKind::kNone: break;
  }
  throw Error(ErrorCode::kInvalidKind, "no filterbank for kind none");
}

const Matrix& CachedDct() {
  static const Matrix dct = DctMatrix(kNumBands);
  return dct;
}

std::vector<double> TriangularEdges(FilterKind kind, std::size_t n_filters, double f_max) {
  std::vector<double> edges(n_filters + 2);
  const double span = kind == FilterKind::kMel ? HzToMel(f_max) : f_max;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    const double v = span * static_cast<double>(j) / static_cast<double>(n_filters + 1);
    edges[j] = kind == FilterKind::kMel ? MelToHz(v) : v;
  }
  return edges;
}

// Delta along the frame axis of a rows x cols array stored row-major.
std::vector<float> DeltaRows(std::span<const float> in, std::size_t rows, std::size_t cols) {
  std::vector<float> out(in.size());
  const auto last = static_cast<std::ptrdiff_t>(cols) - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    const float* c = in.data() + r * cols;
    for (std::ptrdiff_t t = 0; t <= last; ++t) {
      double acc = 0.0;
      for (std::ptrdiff_t n = 1; n <= 2; ++n) {
        const std::ptrdiff_t hi = std::min(t + n, last);
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(t - n, 0);
        acc += static_cast<double>(n) * (static_cast<double>(c[hi]) - static_cast<double>(c[lo]));
      }
      out[r * cols + static_cast<std::size_t>(t)] = static_cast<float>(acc / 10.0);
    }
  }
  return out;
}

}  // namespace

void SpectralConfig::Validate() const {
  if (window_len != kWindowLength || hop_len != kHopLength || n_filters != kNumBands) {
    throw Error(ErrorCode::kInvalidConfig,
                "window/hop/filter count are fixed at 1024/512/64");
  }
  if (!(log_floor > 0.0) || log_floor != kLogFloor) {
    throw Error(ErrorCode::kInvalidConfig, "log floor is fixed at 1e-10");
  }
  if (transform != Transform::kStft && filter != FilterKind::kNone) {
    throw Error(ErrorCode::kInvalidConfig,
                "filterbanks apply to STFT only; CQT and WT produce 64 bands natively");
  }
}

std::uint64_t SpectralConfig::Hash() const {
  std::ostringstream s;
  s << "transform=" << TransformName(transform) << ";filter=" << FilterName(filter)
    << ";dct=" << (dct ? 1 : 0)
    << ";dct_axis=" << (dct_axis == DctAxis::kFrequency ? "freq" : "time")
    << ";window=" << window_len << ";hop=" << hop_len << ";filters=" << n_filters
    << ";floor=" << log_floor;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string SpectralConfig::Describe() const {
  std::string name(TransformName(transform));
  if (filter != FilterKind::kNone) {
    name += "-";
    name += FilterName(filter);
  }
  if (dct) name += dct_axis == DctAxis::kFrequency ? "+dct(freq)" : "+dct(time)";
  return name;
}

std::span<const std::string_view> RecipeNames() { return kRecipeNames; }

SpectralConfig RecipeConfig(std::string_view name, bool dct, DctAxis dct_axis) {
  SpectralConfig c;
  c.dct = dct;
  c.dct_axis = dct_axis;
  if (name == "stft") {
  } else if (name == "cqt") {
    c.transform = Transform::kCqt;
  } else if (name == "wt") {
    c.transform = Transform::kWt;
  } else if (name == "stft-lf") {
    c.filter = FilterKind::kLinear;
  } else if (name == "stft-mel") {
    c.filter = FilterKind::kMel;
  } else if (name == "stft-gam") {
    c.filter = FilterKind::kGammatone;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown recipe '" + std::string(name) + "'");
  }
  return c;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }
double Erb(double hz) { return 24.7 * (4.37 * hz / 1000.0 + 1.0); }
double HzToErbRate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }
double ErbRateToHz(double erb_rate) {
  return (std::pow(10.0, erb_rate / 21.4) - 1.0) / 0.00437;
}

std::vector<double> CqtCenterFrequencies() {
  std::vector<double> f(kNumBands);
  for (std::size_t k = 0; k < kNumBands; ++k) {
    f[k] = kCqtMinHz * std::exp2(static_cast<double>(k) / kCqtBinsPerOctave);
  }
  return f;
}

std::vector<double> CwtCenterFrequencies() {
  std::vector<double> f(kNumBands);
  const double ratio = kCwtMaxHz / kCwtMinHz;
  for (std::size_t k = 0; k < kNumBands; ++k) {
    f[k] = kCwtMinHz * std::pow(ratio, static_cast<double>(k) / (kNumBands - 1));
  }
  return f;
}

std::size_t CqtKernelLength(std::size_t bin) {
  const double q = 1.0 / (std::exp2(1.0 / kCqtBinsPerOctave) - 1.0);
  const double f = kCqtMinHz * std::exp2(static_cast<double>(bin) / kCqtBinsPerOctave);
  const auto len = static_cast<std::size_t>(std::ceil(q * kSampleRateHz / f));
  return std::min(len, kSegmentSamples);
}

Matrix StftPower(const Segment& segment) {
  CheckSegment(segment);
  static const Fft plan(kWindowLength);
  static const std::vector<double> window = HannWindow(kWindowLength);

  const auto& x = segment.samples;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto pad = static_cast<std::ptrdiff_t>(kWindowLength / 2);
  Matrix power(kNumFftBins, kNumFrames);
  std::vector<Complex> buf(kWindowLength);
  for (std::size_t t = 0; t < kComputedFrames; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t * kHopLength) - pad;
    for (std::size_t i = 0; i < kWindowLength; ++i) {
      std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      if (idx < 0) idx = -idx;
      if (idx >= n) idx = 2 * (n - 1) - idx;
      buf[i] = Complex(static_cast<double>(x[static_cast<std::size_t>(idx)]) * window[i], 0.0);
    }
    plan.Forward(buf);
    for (std::size_t k = 0; k < kNumFftBins; ++k) {
      power(k, t) = static_cast<float>(std::norm(buf[k]));
    }
  }
  ReplicateLastFrame(power);
  return power;
}

Matrix PoolLinearBins(const Matrix& power) {
  const std::size_t rows = power.rows();
  if (rows < kNumBands) {
    throw Error(ErrorCode::kShapeMismatch, "need at least 64 rows to pool");
  }
  Matrix out(kNumBands, power.cols());
  for (std::size_t b = 0; b < kNumBands; ++b) {
    // round(rows * b / 64), halves rounded up, in exact integer arithmetic.
    const std::size_t lo = (rows * b + kNumBands / 2) / kNumBands;
    const std::size_t hi = (rows * (b + 1) + kNumBands / 2) / kNumBands;
    for (std::size_t t = 0; t < power.cols(); ++t) {
      double acc = 0.0;
      for (std::size_t r = lo; r < hi; ++r) acc += power(r, t);
      out(b, t) = static_cast<float>(acc / static_cast<double>(hi - lo));
    }
  }
  return out;
}

FilterBank BuildFilterBank(FilterKind kind, std::size_t n_filters, std::size_t n_fft_bins,
                           double sample_rate_hz) {
  if (kind == FilterKind::kNone) {
    throw Error(ErrorCode::kInvalidKind, "filterbank kind must be mel, gammatone or linear");
  }
  if (n_filters == 0 || n_fft_bins < 2) {
    throw Error(ErrorCode::kInvalidConfig, "empty filterbank");
  }
  const double nyquist = sample_rate_hz / 2.0;
  const double bin_hz = nyquist / static_cast<double>(n_fft_bins - 1);

  FilterBank bank;
  bank.kind = kind;
  bank.weights = Matrix(n_filters, n_fft_bins);
  bank.center_hz.resize(n_filters);

  if (kind == FilterKind::kGammatone) {
    const double e_lo = HzToErbRate(kGammatoneLoHz);
    const double e_hi = HzToErbRate(kGammatoneHiHz);
    for (std::size_t k = 0; k < n_filters; ++k) {
      const double frac = n_filters == 1 ? 0.0
                                         : static_cast<double>(k) / static_cast<double>(n_filters - 1);
      const double fc = ErbRateToHz(e_lo + frac * (e_hi - e_lo));
      const double b = 1.019 * Erb(fc);
      bank.center_hz[k] = fc;
      double peak = 0.0;
      for (std::size_t i = 0; i < n_fft_bins; ++i) {
        const double x = (static_cast<double>(i) * bin_hz - fc) / b;
        const double mag2 = 1.0 + x * x;  // |1 + j x|^2
        const double w = 1.0 / (mag2 * mag2);
        bank.weights(k, i) = static_cast<float>(w);
        peak = std::max(peak, w);
      }
      for (float& w : bank.weights.row(k)) w = static_cast<float>(w / peak);
    }
    bank.f_lo = kGammatoneLoHz;
    bank.f_hi = kGammatoneHiHz;
    return bank;
  }

  const std::vector<double> edges = TriangularEdges(kind, n_filters, nyquist);
  for (std::size_t k = 0; k < n_filters; ++k) {
    const double lo = edges[k], center = edges[k + 1], hi = edges[k + 2];
    bank.center_hz[k] = center;
    for (std::size_t i = 0; i < n_fft_bins; ++i) {
      const double f = static_cast<double>(i) * bin_hz;
      const double w = std::min((f - lo) / (center - lo), (hi - f) / (hi - center));
      bank.weights(k, i) = static_cast<float>(std::max(0.0, w));
    }
  }
  bank.f_lo = bank.center_hz.front();
  bank.f_hi = bank.center_hz.back();
  return bank;
}

Matrix ApplyFilterBank(const Matrix& power, const FilterBank& bank) {
  if (bank.weights.cols() != power.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "filterbank has " + std::to_string(bank.weights.cols()) +
                    " bins, spectrogram has " + std::to_string(power.rows()));
  }
  const std::size_t frames = power.cols();
  Matrix out(bank.weights.rows(), frames);
  std::vector<double> acc(frames);
  for (std::size_t k = 0; k < bank.weights.rows(); ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const auto w = bank.weights.row(k);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == 0.0f) continue;
      const auto p = power.row(i);
      for (std::size_t t = 0; t < frames; ++t) acc[t] += static_cast<double>(w[i]) * p[t];
    }
    for (std::size_t t = 0; t < frames; ++t) out(k, t) = static_cast<float>(acc[t]);
  }
  return out;
}

Matrix CqtMagnitude(const Segment& segment) {
  CheckSegment(segment);
  const CqtKernels& kernels = GetCqtKernels();
  const auto& x = segment.samples;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  Matrix out(kNumBands, kNumFrames);
  for (std::size_t k = 0; k < kNumBands; ++k) {
    const auto& taps = kernels.taps[k];
    const auto len = static_cast<std::ptrdiff_t>(taps.size());
    for (std::size_t t = 0; t < kComputedFrames; ++t) {
      // Kernel centered on the frame center t * hop; zeros outside the signal.
      const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * kHopLength) - len / 2;
      const std::ptrdiff_t i0 = std::max<std::ptrdiff_t>(0, -start);
      const std::ptrdiff_t i1 = std::min(len, n - start);
      double re = 0.0, im = 0.0;
      for (std::ptrdiff_t i = i0; i < i1; ++i) {
        const double s = x[static_cast<std::size_t>(start + i)];
        re += s * taps[static_cast<std::size_t>(i)].real();
        im += s * taps[static_cast<std::size_t>(i)].imag();
      }
      out(k, t) = static_cast<float>(std::hypot(re, im));
    }
  }
  ReplicateLastFrame(out);
  return out;
}

Matrix CwtScalogram(const Segment& segment) {
  CheckSegment(segment);
  static const Fft plan(kCwtFftSize);
  static const std::vector<double> centers = CwtCenterFrequencies();

  std::vector<Complex> spectrum(kCwtFftSize);
  for (std::size_t i = 0; i < kSegmentSamples; ++i) spectrum[i] = segment.samples[i];
  plan.Forward(spectrum);

  const double bin_hz = static_cast<double>(kSampleRateHz) / kCwtFftSize;
  const std::size_t half = kCwtFftSize / 2;
  // Beyond |s w - w0| = 9 the Gaussian is below exp(-40.5); those bins are
  // left at zero.
  constexpr double kSupport = 9.0;

  Matrix out(kNumBands, kNumFrames);
  std::vector<Complex> work(kCwtFftSize);
  for (std::size_t k = 0; k < kNumBands; ++k) {
    // Scale s (seconds) with center frequency w0 / (2 pi s).
    const double scale = kMorletOmega0 / (2.0 * kPi * centers[k]);
    std::fill(work.begin(), work.end(), Complex{});
    for (std::size_t m = 0; m <= half; ++m) {
      const double arg = scale * 2.0 * kPi * static_cast<double>(m) * bin_hz - kMorletOmega0;
      if (std::abs(arg) > kSupport) continue;
      // Analytic Morlet; the factor 2 restores the amplitude of a real tone.
      work[m] = spectrum[m] * (2.0 * std::exp(-0.5 * arg * arg));
    }
    plan.Inverse(work);
    for (std::size_t b = 0; b < kComputedFrames; ++b) {
      const std::size_t lo = b * kHopLength;
      const std::size_t hi = std::min(lo + kHopLength, kSegmentSamples);
      double acc = 0.0;
      for (std::size_t i = lo; i < hi; ++i) acc += std::abs(work[i]);
      out(k, b) = static_cast<float>(acc / static_cast<double>(hi - lo));
    }
  }
  ReplicateLastFrame(out);
  return out;
}

Matrix LogCompress(const Matrix& spec, double floor) {
  Matrix out(spec.rows(), spec.cols());
  auto src = spec.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(std::log(std::max(static_cast<double>(src[i]), floor)));
  }
  return out;
}

Matrix DctMatrix(std::size_t n) {
  Matrix d(n, n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t i = 0; i < n; ++i) {
      d(k, i) = static_cast<float>(
          s * std::cos(kPi * (static_cast<double>(i) + 0.5) * static_cast<double>(k) / nn));
    }
  }
  return d;
}

Matrix DctTransform(const Matrix& spec, DctAxis axis) {
  const std::size_t n = axis == DctAxis::kFrequency ? spec.rows() : spec.cols();
  const Matrix& d = n == kNumBands ? CachedDct() : DctMatrix(n);
  Matrix out(spec.rows(), spec.cols());
  if (axis == DctAxis::kFrequency) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t t = 0; t < spec.cols(); ++t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(d(k, i)) * spec(i, t);
        out(k, t) = static_cast<float>(acc);
      }
    }
  } else {
    for (std::size_t r = 0; r < spec.rows(); ++r) {
      for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(d(k, i)) * spec(r, i);
        out(r, k) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

std::vector<float> DeltaStack(const Matrix& spec) {
  const std::size_t rows = spec.rows(), cols = spec.cols();
  const std::vector<float> delta = DeltaRows(spec.data(), rows, cols);
  const std::vector<float> delta2 = DeltaRows(delta, rows, cols);
  std::vector<float> out(rows * cols * kNumChannels);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    out[i * kNumChannels + 0] = spec.data()[i];
    out[i * kNumChannels + 1] = delta[i];
    out[i * kNumChannels + 2] = delta2[i];
  }
  return out;
}

FeatureTensor ExtractFeatures(const Segment& segment, const SpectralConfig& config) {
  config.Validate();
  CheckSegment(segment);

  Matrix bands;
  switch (config.transform) {
    case Transform::kStft: {
      const Matrix power = StftPower(segment);
      bands = config.filter == FilterKind::kNone
                  ? PoolLinearBins(power)
                  : ApplyFilterBank(power, CachedBank(config.filter));
      break;
    }
    case Transform::kCqt:
      bands = CqtMagnitude(segment);
      break;
    case Transform::kWt:
      bands = CwtScalogram(segment);
      break;
  }
  Matrix spec = LogCompress(bands, config.log_floor);
  if (config.dct) spec = DctTransform(spec, config.dct_axis);

  FeatureTensor tensor;
  tensor.utt_id = segment.utt_id;
  tensor.seg_index = static_cast<std::uint32_t>(segment.index);
  tensor.config_hash = config.Hash();
  tensor.data = DeltaStack(spec);

  const std::size_t cells = kNumBands * kNumFrames;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < cells; ++i) sum += tensor.data[i * kNumChannels + c];
    const double mean = sum / static_cast<double>(cells);
    double sq = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      const double d = tensor.data[i * kNumChannels + c] - mean;
      sq += d * d;
    }
    const double sd = std::max(std::sqrt(sq / static_cast<double>(cells)), kNormStdFloor);
    for (std::size_t i = 0; i < cells; ++i) {
      float& v = tensor.data[i * kNumChannels + c];
      v = static_cast<float>((v - mean) / sd);
    }
  }
  return tensor;
}

}  // namespace adfd
