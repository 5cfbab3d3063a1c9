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

#include <cstdlib>
#include <cstring>
#include <fstream>

#include "adfd/error.h"
#include "adfd/protocol.h"
#include "test_support.h"

namespace adfd {
namespace {

using testing::TempDir;

std::filesystem::path DataDir() {
  const char* dir = std::getenv("ADFD_TEST_DATA");
  return dir ? std::filesystem::path(dir) : std::filesystem::path("tests/data");
}

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kIo;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

void WriteBytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TEST(Protocol, SingleLine) {
  TempDir dir;
  WriteText(dir / "p.txt", "LA_0079 LA_T_1138215 - - bonafide\n");
  const Protocol p = ParseProtocol(dir / "p.txt", Subset::kTrain);
  ASSERT_EQ(p.entries.size(), 1u);
  EXPECT_EQ(p.entries[0].speaker_id, "LA_0079");
  EXPECT_EQ(p.entries[0].utt_id, "LA_T_1138215");
  EXPECT_EQ(p.entries[0].system_id, "-");
  EXPECT_EQ(p.entries[0].key, kBonafide);
  EXPECT_EQ(p.entries[0].subset, Subset::kTrain);
}

TEST(Protocol, FixtureCounts) {
  const Protocol p = ParseProtocol(DataDir() / "fixture_protocol.txt", Subset::kDev);
  EXPECT_EQ(p.entries.size(), 20u);
  EXPECT_EQ(p.bonafide_count(), 7u);
  EXPECT_EQ(p.spoof_count(), 13u);
  EXPECT_EQ(p.Keys().size(), 20u);
  EXPECT_EQ(p.Keys().at("LA_T_1272637"), kSpoof);
}

TEST(Protocol, Errors) {
  TempDir dir;
  WriteText(dir / "short.txt", "LA_0079 LA_T_1 - - bonafide\nLA_0079 LA_T_2 - bonafide\n");
  try {
    ParseProtocol(dir / "short.txt", Subset::kTrain);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedLine);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  WriteText(dir / "key.txt", "LA_0079 LA_T_1 - A01 fake\n");
  EXPECT_EQ(CodeOf([&] { ParseProtocol(dir / "key.txt", Subset::kTrain); }), ErrorCode::kUnknownKey);
  WriteText(dir / "dup.txt", "S LA_T_1 - - bonafide\nS LA_T_1 - A01 spoof\n");
  EXPECT_EQ(CodeOf([&] { ParseProtocol(dir / "dup.txt", Subset::kTrain); }), ErrorCode::kMalformedLine);
  EXPECT_EQ(CodeOf([&] { ParseProtocol(dir / "none.txt", Subset::kTrain); }), ErrorCode::kIo);
}

// Genuine LA protocols, when a copy is available.
TEST(Protocol, AsvspoofLaCounts) {
  const char* root = std::getenv("ASVSPOOF_LA_DIR");
  if (!root) GTEST_SKIP() << "ASVSPOOF_LA_DIR not set";
  const std::filesystem::path dir = std::filesystem::path(root) / "ASVspoof2019_LA_cm_protocols";
  struct Case {
    const char* file;
    Subset subset;
    std::size_t spoof, bonafide;
  };
  for (const Case& c : {Case{"ASVspoof2019.LA.cm.train.trn.txt", Subset::kTrain, 22800, 2580},
                        Case{"ASVspoof2019.LA.cm.dev.trl.txt", Subset::kDev, 22296, 2548},
                        Case{"ASVspoof2019.LA.cm.eval.trl.txt", Subset::kEval, 63882, 7355}}) {
    const Protocol p = ParseProtocol(dir / c.file, c.subset);
    EXPECT_EQ(p.spoof_count(), c.spoof) << c.file;
    EXPECT_EQ(p.bonafide_count(), c.bonafide) << c.file;
  }
}

FeatureCache RandomCache(std::size_t n, std::uint64_t hash) {
  Rng rng(n);
  FeatureCache cache;
  cache.config_hash = hash;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureTensor t;
    t.utt_id = "utt" + std::to_string(i / 3);
    t.seg_index = static_cast<std::uint32_t>(i % 3);
    t.config_hash = hash;
    t.data.resize(kFeatureSize);
    for (float& v : t.data) v = static_cast<float>(rng.Gaussian());
    cache.records.push_back(std::move(t));
  }
  return cache;
}

TEST(FeatureCache, RoundTripBitExact) {
  TempDir dir;
  const FeatureCache cache = RandomCache(100, 0xfeedULL);
  WriteFeatureCache(dir / "c.bin", cache);
  const FeatureCache back = ReadFeatureCache(dir / "c.bin", 0xfeedULL);
  ASSERT_EQ(back.records.size(), 100u);
  EXPECT_EQ(back.config_hash, 0xfeedULL);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(back.records[i].utt_id, cache.records[i].utt_id);
    EXPECT_EQ(back.records[i].seg_index, cache.records[i].seg_index);
    ASSERT_EQ(std::memcmp(back.records[i].data.data(), cache.records[i].data.data(), kFeatureSize * 4), 0);
  }
  WriteFeatureCache(dir / "c2.bin", back);
  EXPECT_EQ(testing::ReadBytes(dir / "c.bin"), testing::ReadBytes(dir / "c2.bin"));
}

TEST(FeatureCache, RejectsDamage) {
  TempDir dir;
  WriteFeatureCache(dir / "c.bin", RandomCache(3, 7));
  const auto bytes = testing::ReadBytes(dir / "c.bin");

  EXPECT_EQ(CodeOf([&] { ReadFeatureCache(dir / "c.bin", 8); }), ErrorCode::kConfigHashMismatch);

  for (std::size_t cut : {bytes.size() - 1, bytes.size() - 5000, std::size_t{10}}) {
    WriteBytes(dir / "t.bin", std::vector<char>(bytes.begin(), bytes.begin() + static_cast<long>(cut)));
    EXPECT_EQ(CodeOf([&] { ReadFeatureCache(dir / "t.bin"); }), ErrorCode::kCorrupt) << cut;
  }
  auto magic = bytes;
  magic[0] = 'X';
  WriteBytes(dir / "m.bin", magic);
  EXPECT_EQ(CodeOf([&] { ReadFeatureCache(dir / "m.bin"); }), ErrorCode::kBadMagic);
  auto version = bytes;
  version[4] = 9;
  WriteBytes(dir / "v.bin", version);
  EXPECT_EQ(CodeOf([&] { ReadFeatureCache(dir / "v.bin"); }), ErrorCode::kVersionUnsupported);
  auto dims = bytes;
  dims[14] = 32;  // bands
  WriteBytes(dir / "d.bin", dims);
  EXPECT_EQ(CodeOf([&] { ReadFeatureCache(dir / "d.bin"); }), ErrorCode::kShapeMismatch);

  FeatureCacheWriter writer(dir / "w.bin", 7);
  FeatureTensor foreign = RandomCache(1, 8).records[0];
  EXPECT_EQ(CodeOf([&] { writer.Append(foreign); }), ErrorCode::kConfigHashMismatch);
}

ModelCheckpoint SampleCheckpoint() {
  ModelCheckpoint c;
  c.model = InitModel("mlp-head:192", 99);
  c.config.epochs = 7;
  c.config.seed = 99;
  c.config.lr = 2.5e-4;
  c.config.shuffle = false;
  c.epoch = 3;
  c.dev_eer = 0.125;
  return c;
}

TEST(Checkpoint, RoundTripReproducesPredictions) {
  TempDir dir;
  const ModelCheckpoint c = SampleCheckpoint();
  SaveCheckpoint(dir / "m.ckpt", c);
  const ModelCheckpoint back = LoadCheckpoint(dir / "m.ckpt");
  EXPECT_EQ(back.model.arch.arch_id, "mlp-head:192");
  EXPECT_EQ(back.model.seed, 99u);
  EXPECT_EQ(back.epoch, 3u);
  EXPECT_EQ(back.dev_eer, 0.125);
  EXPECT_EQ(back.config.epochs, 7u);
  EXPECT_EQ(back.config.lr, 2.5e-4);
  EXPECT_FALSE(back.config.shuffle);
  EXPECT_TRUE(back.config.class_weighting);
  for (std::size_t p = 0; p < c.model.params.size(); ++p) {
    EXPECT_EQ(back.model.params[p].name, c.model.params[p].name);
    EXPECT_EQ(back.model.params[p].dims, c.model.params[p].dims);
    ASSERT_EQ(back.model.params[p].data, c.model.params[p].data);
  }
  Tensor4 x(5, 1, 1, 192);
  Rng rng(1);
  for (float& v : x.data) v = static_cast<float>(rng.Gaussian());
  EXPECT_EQ(Forward(back.model, x, RunMode::Eval()).values, Forward(c.model, x, RunMode::Eval()).values);
  SaveCheckpoint(dir / "m2.ckpt", back);
  EXPECT_EQ(testing::ReadBytes(dir / "m.ckpt"), testing::ReadBytes(dir / "m2.ckpt"));
}

TEST(Checkpoint, TamperedHeaders) {
  TempDir dir;
  SaveCheckpoint(dir / "m.ckpt", SampleCheckpoint());
  const auto bytes = testing::ReadBytes(dir / "m.ckpt");
  // magic, version, arch_id, then 8+8+4+8+8+8+8+1+1 bytes of metadata, the
  // tensor count (u32) and the scalar count (u64).
  const std::size_t arch_end = 4 + 2 + 2 + std::string("mlp-head:192").size();
  const std::size_t tensors_at = arch_end + 54;
  const std::size_t scalars_at = tensors_at + 4;
  std::uint64_t scalars = 0;
  std::memcpy(&scalars, bytes.data() + scalars_at, 8);
  ASSERT_EQ(scalars, 192u * 128 + 128 + 256 + 2);

  auto count = bytes;
  count[scalars_at] ^= 1;
  WriteBytes(dir / "c.ckpt", count);
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "c.ckpt"); }), ErrorCode::kArchMismatch);
  auto tensors = bytes;
  tensors[tensors_at] = 3;
  WriteBytes(dir / "t.ckpt", tensors);
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "t.ckpt"); }), ErrorCode::kArchMismatch);
  auto arch = bytes;
  arch[arch_end - 1] = '3';  // mlp-head:193
  WriteBytes(dir / "a.ckpt", arch);
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "a.ckpt"); }), ErrorCode::kArchMismatch);
  auto magic = bytes;
  magic[1] = 'Z';
  WriteBytes(dir / "b.ckpt", magic);
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "b.ckpt"); }), ErrorCode::kBadMagic);
  WriteBytes(dir / "s.ckpt", std::vector<char>(bytes.begin(), bytes.end() - 4));
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "s.ckpt"); }), ErrorCode::kCorrupt);
  auto extra = bytes;
  extra.push_back(0);
  WriteBytes(dir / "e.ckpt", extra);
  EXPECT_EQ(CodeOf([&] { LoadCheckpoint(dir / "e.ckpt"); }), ErrorCode::kCorrupt);
}

std::string EmbeddingLine(const std::string& id, std::size_t dim, double v) {
  std::string line = id;
  for (std::size_t i = 0; i < dim; ++i) line += "\t" + std::to_string(v + 0.001 * i);
  return line + "\n";
}

TEST(Embeddings, ReadAndValidate) {
  TempDir dir;
  WriteText(dir / "e192.tsv", EmbeddingLine("a", 192, 0.5) + EmbeddingLine("b", 192, -1.0));
  const auto records = ReadEmbeddings(dir / "e192.tsv");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[1].utt_id, "b");
  ASSERT_EQ(records[0].vector.size(), 192u);
  EXPECT_FLOAT_EQ(records[0].vector[10], 0.51f);

  WriteText(dir / "mixed.tsv", EmbeddingLine("a", 512, 0.0) + EmbeddingLine("b", 1024, 0.0));
  EXPECT_EQ(CodeOf([&] { ReadEmbeddings(dir / "mixed.tsv"); }), ErrorCode::kRaggedRows);
  WriteText(dir / "seven.tsv", EmbeddingLine("a", 7, 0.0));
  EXPECT_EQ(CodeOf([&] { ReadEmbeddings(dir / "seven.tsv"); }), ErrorCode::kUnsupportedDim);
  std::string bad = EmbeddingLine("a", 192, 0.0);
  bad.replace(bad.find('\t') + 1, 1, "x");
  WriteText(dir / "bad.tsv", bad);
  EXPECT_EQ(CodeOf([&] { ReadEmbeddings(dir / "bad.tsv"); }), ErrorCode::kNonNumericField);
  WriteText(dir / "empty.tsv", "");
  EXPECT_EQ(CodeOf([&] { ReadEmbeddings(dir / "empty.tsv"); }), ErrorCode::kEmptyDataset);

  std::vector<EmbeddingRecord> out;
  Rng rng(3);
  for (int i = 0; i < 4; ++i) {
    EmbeddingRecord r{"u" + std::to_string(i), std::vector<float>(1024), ""};
    for (float& v : r.vector) v = static_cast<float>(rng.Gaussian());
    out.push_back(r);
  }
  WriteEmbeddings(dir / "rt.tsv", out);
  const auto rt = ReadEmbeddings(dir / "rt.tsv");
  for (int i = 0; i < 4; ++i) EXPECT_EQ(rt[i].vector, out[i].vector);
}

}  // namespace
}  // namespace adfd
