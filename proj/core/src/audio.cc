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

#include "adfd/audio.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adfd/error.h"

namespace adfd {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

AudioClip LoadAudio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path.string());

  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kUnsupportedFormat, "not a RIFF/WAVE file: " + name);
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || available < 16) {
        throw Error(ErrorCode::kUnsupportedFormat, "short fmt chunk: " + name);
      }
      format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      rate = ReadU32(chunk + 12);
      bits = ReadU16(chunk + 22);
      // WAVE_FORMAT_EXTENSIBLE carries the real format in the sub-format GUID.
      if (format == 0xFFFE && size >= 40 && available >= 40) {
        format = ReadU16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      // Some writers leave the size of a streamed data chunk unset.
      data_size = std::min<std::size_t>(size, available);
      break;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw Error(ErrorCode::kUnsupportedFormat, "missing fmt chunk: " + name);
  if (data == nullptr) throw Error(ErrorCode::kUnsupportedFormat, "missing data chunk: " + name);
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "unsupported codec (format " + std::to_string(format) + ", " +
                    std::to_string(bits) + " bits): " + name);
  }
  if (channels != 1) {
    throw Error(ErrorCode::kUnsupportedFormat,
                std::to_string(channels) + " channels, expected mono: " + name);
  }
  if (rate != static_cast<std::uint32_t>(kSampleRateHz)) {
    throw Error(ErrorCode::kSampleRateMismatch,
                std::to_string(rate) + " Hz, expected 16000: " + name);
  }

  AudioClip clip;
  clip.utt_id = path.stem().string();
  clip.sample_rate_hz = kSampleRateHz;
  if (pcm16) {
    const std::size_t n = data_size / 2;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::int16_t>(ReadU16(data + 2 * i));
      clip.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else {
    const std::size_t n = data_size / 4;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits32 = ReadU32(data + 4 * i);
      float v;
      std::memcpy(&v, &bits32, sizeof(v));
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kUnsupportedFormat, "non-finite sample in " + name);
      }
      clip.samples[i] = std::clamp(v, -1.0f, 1.0f);
    }
  }
  if (clip.samples.empty()) throw Error(ErrorCode::kEmptyAudio, "no samples in " + name);
  if (clip.utt_id.empty()) throw Error(ErrorCode::kIo, "empty file stem: " + name);
  return clip;
}

void WriteWav(const std::filesystem::path& path, std::span<const float> samples,
              int sample_rate_hz, WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bytes_per_sample = pcm ? 2 : 4;
  const auto data_size = static_cast<std::uint32_t>(samples.size() * bytes_per_sample);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  PutU32(out, 36 + data_size);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, pcm ? kFormatPcm : kFormatFloat);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(sample_rate_hz));
  PutU32(out, static_cast<std::uint32_t>(sample_rate_hz) * bytes_per_sample);
  PutU16(out, bytes_per_sample);
  PutU16(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
  out += "data";
  PutU32(out, data_size);
  for (float s : samples) {
    if (pcm) {
      const double scaled = std::nearbyint(static_cast<double>(s) * 32768.0);
      const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      PutU16(out, static_cast<std::uint16_t>(v));
    } else {
      std::uint32_t bits32;
      std::memcpy(&bits32, &s, sizeof(bits32));
      PutU32(out, bits32);
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<Segment> SegmentClip(const AudioClip& clip) {
  const std::size_t len = clip.samples.size();
  if (len == 0) throw Error(ErrorCode::kEmptyAudio, "cannot segment empty clip " + clip.utt_id);

  const std::size_t count = (len + kSegmentSamples - 1) / kSegmentSamples;
  std::vector<Segment> segments(count);
  for (std::size_t s = 0; s < count; ++s) {
    Segment& seg = segments[s];
    seg.utt_id = clip.utt_id;
    seg.index = s;
    seg.samples.resize(kSegmentSamples);
    const std::size_t start = s * kSegmentSamples;
    const std::size_t own = std::min(kSegmentSamples, len - start);
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), own,
                seg.samples.begin());
    // Cyclic fill: continue from the beginning of the clip, wrapping as often
    // as needed for clips shorter than the remaining gap.
    std::size_t src = 0;
    for (std::size_t i = own; i < kSegmentSamples; ++i) {
      seg.samples[i] = clip.samples[src];
      if (++src == len) src = 0;
    }
  }
  return segments;
}

}  // namespace adfd
