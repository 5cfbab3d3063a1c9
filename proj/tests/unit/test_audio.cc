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

#include <gtest/gtest.h>

#include <cstdint>
#include <cstring>
#include <fstream>

#include "adfd/audio.h"
#include "adfd/error.h"
#include "test_support.h"

namespace adfd {
namespace {

using testing::TempDir;

void ExpectCode(ErrorCode code, auto&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << ErrorCodeName(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

AudioClip ClipOfLength(std::size_t n) {
  AudioClip c;
  c.utt_id = "c";
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.samples[i] = static_cast<float>(i % 1000) / 1000.0f;
  return c;
}

TEST(LoadAudio, ConstantPcmIsExactHalf) {
  TempDir dir;
  std::vector<float> x(32000, 0.5f);
  WriteWav(dir / "half.wav", x);
  const AudioClip clip = LoadAudio(dir / "half.wav");
  EXPECT_EQ(clip.utt_id, "half");
  ASSERT_EQ(clip.samples.size(), 32000u);
  for (float v : clip.samples) ASSERT_EQ(v, 0.5f);
}

TEST(LoadAudio, FloatRoundTripsExactly) {
  TempDir dir;
  Rng rng(3);
  std::vector<float> x(1234);
  for (float& v : x) v = static_cast<float>(rng.Uniform(-1.0, 1.0));
  WriteWav(dir / "f.wav", x, kSampleRateHz, WavEncoding::kFloat32);
  EXPECT_EQ(LoadAudio(dir / "f.wav").samples, x);
}

TEST(LoadAudio, Errors) {
  TempDir dir;
  WriteWav(dir / "empty.wav", std::vector<float>{});
  ExpectCode(ErrorCode::kEmptyAudio, [&] { LoadAudio(dir / "empty.wav"); });
  WriteWav(dir / "cd.wav", std::vector<float>(100, 0.1f), 44100);
  ExpectCode(ErrorCode::kSampleRateMismatch, [&] { LoadAudio(dir / "cd.wav"); });
  ExpectCode(ErrorCode::kIo, [&] { LoadAudio(dir / "absent.wav"); });
  {
    std::ofstream junk(dir / "junk.wav", std::ios::binary);
    junk << "this is not a wave file at all, just text padding it out";
  }
  ExpectCode(ErrorCode::kUnsupportedFormat, [&] { LoadAudio(dir / "junk.wav"); });
}

TEST(LoadAudio, RejectsStereo) {
  TempDir dir;
  WriteWav(dir / "m.wav", std::vector<float>(16, 0.25f));
  auto bytes = testing::ReadBytes(dir / "m.wav");
  // fmt chunk: channels at byte 22.
  bytes[22] = 2;
  std::ofstream(dir / "s.wav", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  ExpectCode(ErrorCode::kUnsupportedFormat, [&] { LoadAudio(dir / "s.wav"); });
}

TEST(SegmentClip, ExactHalves) {
  const AudioClip clip = ClipOfLength(64000);
  const auto segs = SegmentClip(clip);
  ASSERT_EQ(segs.size(), 2u);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(segs[s].index, s);
    EXPECT_EQ(segs[s].utt_id, "c");
    EXPECT_TRUE(std::equal(segs[s].samples.begin(), segs[s].samples.end(),
                           clip.samples.begin() + static_cast<long>(s * 32000)));
  }
}

TEST(SegmentClip, ShortClipRepeats) {
  const AudioClip clip = ClipOfLength(8000);
  const auto segs = SegmentClip(clip);
  ASSERT_EQ(segs.size(), 1u);
  for (std::size_t i = 0; i < 32000; ++i) ASSERT_EQ(segs[0].samples[i], clip.samples[i % 8000]);
}

TEST(SegmentClip, CyclicTailMatchesIndexOracle) {
  for (std::size_t len : {40000u, 32001u, 95999u, 7u, 32000u}) {
    const AudioClip clip = ClipOfLength(len);
    // Materialize the cyclic extension explicitly.
    const std::size_t count = (len + 31999) / 32000;
    std::vector<float> extended;
    while (extended.size() < count * 32000) {
      extended.insert(extended.end(), clip.samples.begin(), clip.samples.end());
    }
    std::vector<float> expected(clip.samples);
    const std::size_t tail = count * 32000 - len;
    // Tail continues from the clip's first sample, cycling as needed.
    for (std::size_t i = 0; i < tail; ++i) expected.push_back(extended[i]);
    const auto segs = SegmentClip(clip);
    ASSERT_EQ(segs.size(), count) << len;
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t i = 0; i < 32000; ++i) {
        ASSERT_EQ(segs[s].samples[i], expected[s * 32000 + i]) << len << " " << s << " " << i;
      }
    }
  }
  const auto segs = SegmentClip(ClipOfLength(40000));
  const AudioClip clip = ClipOfLength(40000);
  EXPECT_EQ(segs[1].samples[7999], clip.samples[39999]);
  EXPECT_EQ(segs[1].samples[8000], clip.samples[0]);
  EXPECT_EQ(segs[1].samples[31999], clip.samples[23999]);
}

TEST(SegmentClip, EmptyThrows) {
  ExpectCode(ErrorCode::kEmptyAudio, [] { SegmentClip(AudioClip{}); });
}

}  // namespace
}  // namespace adfd
