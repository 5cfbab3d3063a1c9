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

#ifndef ADFD_AUDIO_H_
#define ADFD_AUDIO_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace adfd {

inline constexpr int kSampleRateHz = 16000;
// 2 s at 16 kHz.
inline constexpr std::size_t kSegmentSamples = 32000;

// Decoded mono waveform. Samples lie in [-1, 1].
struct AudioClip {
  std::string utt_id;
  std::vector<float> samples;
  int sample_rate_hz = kSampleRateHz;
};

// One fixed-length window of a clip. samples.size() == kSegmentSamples.
struct Segment {
  std::string utt_id;
  std::size_t index = 0;
  std::vector<float> samples;
};

// Reads a RIFF/WAVE file holding mono 16 kHz PCM-16 (format 1) or IEEE
// float-32 (format 3) samples. PCM-16 is scaled by 1/32768; float samples are
// clamped to [-1, 1]. Chunks other than "fmt " and "data" are skipped. The
// utt_id is the file stem.
//
// Throws Error with kIo, kUnsupportedFormat, kSampleRateMismatch or
// kEmptyAudio.
AudioClip LoadAudio(const std::filesystem::path& path);

enum class WavEncoding { kPcm16, kFloat32 };

// Writes a mono WAV file. PCM-16 output rounds and saturates.
void WriteWav(const std::filesystem::path& path, std::span<const float> samples,
              int sample_rate_hz = kSampleRateHz,
              WavEncoding encoding = WavEncoding::kPcm16);

// Splits a clip into ceil(len / kSegmentSamples) consecutive, non-overlapping
// segments. A final short window (or a clip shorter than one segment) is
// completed by cycling through the whole clip from its first sample.
std::vector<Segment> SegmentClip(const AudioClip& clip);

}  // namespace adfd

#endif  // ADFD_AUDIO_H_
