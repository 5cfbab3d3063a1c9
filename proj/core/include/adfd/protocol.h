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

#ifndef ADFD_PROTOCOL_H_
#define ADFD_PROTOCOL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adfd/spectral.h"
#include "adfd/train.h"

namespace adfd {

enum class Subset { kTrain, kDev, kEval };

// Throws Error(kInvalidConfig) for anything but train/dev/eval.
Subset ParseSubset(std::string_view name);
std::string_view SubsetName(Subset subset);

// One line of an ASVspoof-style countermeasure protocol.
struct TrialEntry {
  std::string speaker_id;
  std::string utt_id;
  std::string system_id;  // "-" for bonafide
  int key = kBonafide;
  Subset subset = Subset::kTrain;
};

struct Protocol {
  Subset subset = Subset::kTrain;
  std::vector<TrialEntry> entries;

  std::size_t bonafide_count() const;
  std::size_t spoof_count() const;
  std::map<std::string, int> Keys() const;
};

// Five whitespace-separated fields per non-empty line:
//   speaker utt_id <unused> system_id key
// with key exactly "bonafide" or "spoof".
// Throws Error(kIo), Error(kMalformedLine) (with the 1-based line number,
// also for a repeated utt_id) or Error(kUnknownKey).
Protocol ParseProtocol(const std::filesystem::path& path, Subset subset);

// Binary feature cache, little-endian:
//   "ADFC" | u16 version (1) | u64 config_hash | u32 x 3 dims (64, 64, 3)
//   then records of u16 id length | id bytes | u32 seg_index | 12288 x f32
struct FeatureCache {
  std::uint64_t config_hash = 0;
  std::vector<FeatureTensor> records;
};

// Streams records to disk in call order.
class FeatureCacheWriter {
 public:
  FeatureCacheWriter(const std::filesystem::path& path, std::uint64_t config_hash);
  // Throws Error(kShapeMismatch) for a wrong payload size or
  // Error(kConfigHashMismatch) if the tensor was made with another config.
  void Append(const FeatureTensor& tensor);
  // Flushes and reports write failures; called by the destructor otherwise.
  void Close();
  ~FeatureCacheWriter();

  FeatureCacheWriter(const FeatureCacheWriter&) = delete;
  FeatureCacheWriter& operator=(const FeatureCacheWriter&) = delete;

 private:
  std::filesystem::path path_;
  std::uint64_t config_hash_;
  std::ofstream out_;
};

void WriteFeatureCache(const std::filesystem::path& path, const FeatureCache& cache);

// Throws Error(kIo), Error(kBadMagic), Error(kVersionUnsupported),
// Error(kShapeMismatch) for foreign dims, Error(kCorrupt) for truncated or
// non-finite payloads, and Error(kConfigHashMismatch) when expected_hash is
// given and differs.
FeatureCache ReadFeatureCache(const std::filesystem::path& path,
                              std::optional<std::uint64_t> expected_hash = std::nullopt);

// Checkpoint, little-endian:
//   "ADCK" | u16 version (1) | u16 len + arch_id | u64 seed | f64 dev_eer
//   | u32 epoch | u64 epochs | u64 batch_size | f64 lr | u64 train seed
//   | u8 class_weighting | u8 shuffle | u32 tensor count | u64 scalar count
//   then per tensor: u16 len + name | u32 rank | rank x u32 dims | f32 data
void SaveCheckpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint);

// Throws Error(kIo), Error(kBadMagic), Error(kVersionUnsupported),
// Error(kCorrupt), or Error(kArchMismatch) when the stored tensors do not
// match the layout implied by arch_id.
ModelCheckpoint LoadCheckpoint(const std::filesystem::path& path);

// TSV rows "utt_id<TAB>v1<TAB>...<TAB>vD" with one D per file, D in
// {192, 512, 1024}. source_tag is the file stem.
// Throws Error(kIo), Error(kEmptyDataset), Error(kRaggedRows),
// Error(kNonNumericField) or Error(kUnsupportedDim).
std::vector<EmbeddingRecord> ReadEmbeddings(const std::filesystem::path& path);

void WriteEmbeddings(const std::filesystem::path& path, std::span<const EmbeddingRecord> records);

}  // namespace adfd

#endif  // ADFD_PROTOCOL_H_
