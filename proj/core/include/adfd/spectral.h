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

#ifndef ADFD_SPECTRAL_H_
#define ADFD_SPECTRAL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adfd/audio.h"
#include "adfd/matrix.h"

namespace adfd {

inline constexpr std::size_t kWindowLength = 1024;
inline constexpr std::size_t kHopLength = 512;
inline constexpr std::size_t kNumBands = 64;
inline constexpr std::size_t kNumFftBins = kWindowLength / 2 + 1;  // 513
// Frames actually computed from a 2 s segment with hop 512.
inline constexpr std::size_t kComputedFrames = 63;
// Frames after replicating the last computed frame.
inline constexpr std::size_t kNumFrames = 64;
inline constexpr std::size_t kNumChannels = 3;
inline constexpr std::size_t kFeatureSize = kNumBands * kNumFrames * kNumChannels;
inline constexpr double kLogFloor = 1e-10;

enum class Transform { kStft, kCqt, kWt };
enum class FilterKind { kNone, kMel, kGammatone, kLinear };
enum class DctAxis { kFrequency, kTime };

// A front-end recipe. Window, hop, band count and log floor are fixed for
// this toolkit; Validate() rejects anything else.
struct SpectralConfig {
  Transform transform = Transform::kStft;
  FilterKind filter = FilterKind::kNone;
  bool dct = false;
  DctAxis dct_axis = DctAxis::kFrequency;
  std::size_t window_len = kWindowLength;
  std::size_t hop_len = kHopLength;
  std::size_t n_filters = kNumBands;
  double log_floor = kLogFloor;

  // Throws Error(kInvalidConfig).
  void Validate() const;
  // FNV-1a over a canonical text rendering of every field. Stable across
  // platforms and releases of this library.
  std::uint64_t Hash() const;
  // e.g. "stft-lf+dct(freq)"
  std::string Describe() const;
};

// The six recipe names: stft, cqt, wt, stft-lf, stft-mel, stft-gam.
std::span<const std::string_view> RecipeNames();
// Throws Error(kInvalidConfig) for an unknown name.
SpectralConfig RecipeConfig(std::string_view name, bool dct = false,
                            DctAxis dct_axis = DctAxis::kFrequency);

struct FilterBank {
  FilterKind kind = FilterKind::kLinear;
  // n_filters x n_fft_bins, non-negative; rows ordered by center frequency.
  Matrix weights;
  std::vector<double> center_hz;
  // Every FFT bin whose frequency lies in [f_lo, f_hi] gets positive weight
  // from at least one filter. For the triangular banks this is the span
  // between the first and last centers; the gammatone bank covers its
  // nominal design range.
  double f_lo = 0.0;
  double f_hi = 0.0;
};

// 64 x 64 x 3 feature map in band-major, frame, channel order
// (index = (band * 64 + frame) * 3 + channel). Channels are
// [static, delta, delta-delta].
struct FeatureTensor {
  std::string utt_id;
  std::uint32_t seg_index = 0;
  std::vector<float> data;
  std::uint64_t config_hash = 0;

  float at(std::size_t band, std::size_t frame, std::size_t channel) const {
    return data[(band * kNumFrames + frame) * kNumChannels + channel];
  }
};

// Frequency-scale helpers.
double HzToMel(double hz);  // HTK: 2595 log10(1 + f / 700)
double MelToHz(double mel);
double Erb(double hz);      // Glasberg-Moore: 24.7 (4.37 f / 1000 + 1)
double HzToErbRate(double hz);
double ErbRateToHz(double erb_rate);

// Center frequencies of the native 64-band transforms.
std::vector<double> CqtCenterFrequencies();
std::vector<double> CwtCenterFrequencies();
// Kernel length of CQT bin k: min(ceil(Q fs / f_k), 32000).
std::size_t CqtKernelLength(std::size_t bin);

// Power spectrogram, 513 x 64. Periodic Hann window of 1024, hop 512, 512
// samples of reflect padding on both edges; 63 frames, the last replicated.
Matrix StftPower(const Segment& segment);

// Reduces 513 STFT rows to 64 by averaging contiguous groups with
// boundaries round(rows * k / 64).
Matrix PoolLinearBins(const Matrix& power);

FilterBank BuildFilterBank(FilterKind kind, std::size_t n_filters = kNumBands,
                           std::size_t n_fft_bins = kNumFftBins,
                           double sample_rate_hz = kSampleRateHz);

// weights x power. Throws Error(kShapeMismatch).
Matrix ApplyFilterBank(const Matrix& power, const FilterBank& bank);

// 64 x 64 constant-Q magnitude, 8 bins per octave from 31.25 Hz.
Matrix CqtMagnitude(const Segment& segment);

// 64 x 64 Morlet (w0 = 6) scalogram with centers from 60 Hz to 7800 Hz.
// Each entry is the mean analytic magnitude over a 512-sample block, scaled
// so that a unit sine at a scale's center frequency reads about 1.
Matrix CwtScalogram(const Segment& segment);

// ln(max(x, floor)).
Matrix LogCompress(const Matrix& spec, double floor = kLogFloor);

// Orthonormal DCT-II basis, n x n, D[k][i] = s_k cos(pi (i + 1/2) k / n).
Matrix DctMatrix(std::size_t n);

// Orthonormal DCT-II along the chosen axis, every coefficient kept.
Matrix DctTransform(const Matrix& spec, DctAxis axis);

// Regression delta (window 2, edge replication) along the frame axis and the
// delta of that delta, stacked as [static, delta, delta-delta] in
// band, frame, channel order.
std::vector<float> DeltaStack(const Matrix& spec);

// Full front-end: transform, then filterbank (or linear pooling for plain
// STFT), log, optional DCT, deltas and per-channel z-score normalization.
// Channels with (near) zero spread are left at 0.
FeatureTensor ExtractFeatures(const Segment& segment, const SpectralConfig& config);

}  // namespace adfd

#endif  // ADFD_SPECTRAL_H_
