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

#include "adfd/protocol.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "adfd/error.h"

namespace adfd {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with little-endian host layout");

constexpr char kCacheMagic[4] = {'A', 'D', 'F', 'C'};
constexpr char kCheckpointMagic[4] = {'A', 'D', 'C', 'K'};
constexpr std::uint16_t kFormatVersion = 1;

template <typename T>
void Put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void PutString(std::ostream& out, std::string_view s) {
  if (s.size() > 0xffff) throw Error(ErrorCode::kInvalidConfig, "identifier too long");
  Put(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

// Sequential reader that turns any short read into Error(kCorrupt).
class Reader {
 public:
  Reader(std::istream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  void Bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorCode::kCorrupt, "truncated file " + path_.string());
    }
  }

  template <typename T>
  T Get() {
    T value;
    Bytes(&value, sizeof(T));
    return value;
  }

  std::string String() {
    const auto len = Get<std::uint16_t>();
    std::string s(len, '\0');
    Bytes(s.data(), len);
    return s;
  }

  bool AtEnd() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
  const std::filesystem::path& path_;
};

void CheckMagic(Reader& reader, const char (&magic)[4], const std::filesystem::path& path) {
  char got[4];
  try {
    reader.Bytes(got, 4);
  } catch (const Error&) {
    throw Error(ErrorCode::kBadMagic, "file too short for a header: " + path.string());
  }
  if (std::memcmp(got, magic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "unexpected magic in " + path.string());
  }
  const auto version = reader.Get<std::uint16_t>();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                "version " + std::to_string(version) + " in " + path.string());
  }
}

std::ifstream OpenBinary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::string LineError(const std::filesystem::path& path, std::size_t line_no, const std::string& why) {
  return path.string() + ":" + std::to_string(line_no) + ": " + why;
}

}  // namespace

Subset ParseSubset(std::string_view name) {
  if (name == "train") return Subset::kTrain;
  if (name == "dev") return Subset::kDev;
  if (name == "eval") return Subset::kEval;
  throw Error(ErrorCode::kInvalidConfig, "unknown subset '" + std::string(name) + "'");
}

std::string_view SubsetName(Subset subset) {
  switch (subset) {
    case Subset::kTrain: return "train";
    case Subset::kDev: return "dev";
    case Subset::kEval: return "eval";
  }
  return "?";
}

std::size_t Protocol::bonafide_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.key == kBonafide ? 1 : 0;
  return n;
}

std::size_t Protocol::spoof_count() const { return entries.size() - bonafide_count(); }

std::map<std::string, int> Protocol::Keys() const {
  std::map<std::string, int> keys;
  for (const auto& e : entries) keys.emplace(e.utt_id, e.key);
  return keys;
}

Protocol ParseProtocol(const std::filesystem::path& path, Subset subset) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Protocol protocol;
  protocol.subset = subset;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string tok; fields >> tok;) f.push_back(std::move(tok));
    if (f.empty()) continue;
    if (f.size() != 5) {
      throw Error(ErrorCode::kMalformedLine,
                  LineError(path, line_no, "expected 5 fields, got " + std::to_string(f.size())));
    }
    TrialEntry entry;
    entry.speaker_id = f[0];
    entry.utt_id = f[1];
    entry.system_id = f[3];
    entry.subset = subset;
    if (f[4] == "bonafide") {
      entry.key = kBonafide;
    } else if (f[4] == "spoof") {
      entry.key = kSpoof;
    } else {
      throw Error(ErrorCode::kUnknownKey, LineError(path, line_no, "unknown key '" + f[4] + "'"));
    }
    if (!seen.insert(entry.utt_id).second) {
      throw Error(ErrorCode::kMalformedLine,
                  LineError(path, line_no, "repeated utterance " + entry.utt_id));
    }
    protocol.entries.push_back(std::move(entry));
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return protocol;
}

FeatureCacheWriter::FeatureCacheWriter(const std::filesystem::path& path, std::uint64_t config_hash)
    : path_(path), config_hash_(config_hash), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  out_.write(kCacheMagic, 4);
  Put(out_, kFormatVersion);
  Put(out_, config_hash);
  Put(out_, static_cast<std::uint32_t>(kNumBands));
  Put(out_, static_cast<std::uint32_t>(kNumFrames));
  Put(out_, static_cast<std::uint32_t>(kNumChannels));
}

void FeatureCacheWriter::Append(const FeatureTensor& tensor) {
  if (tensor.data.size() != kFeatureSize) {
    throw Error(ErrorCode::kShapeMismatch, tensor.utt_id + ": payload is not 64x64x3");
  }
  if (tensor.config_hash != config_hash_) {
    throw Error(ErrorCode::kConfigHashMismatch, tensor.utt_id + ": extracted with another config");
  }
  PutString(out_, tensor.utt_id);
  Put(out_, tensor.seg_index);
  out_.write(reinterpret_cast<const char*>(tensor.data.data()),
             static_cast<std::streamsize>(kFeatureSize * sizeof(float)));
}

void FeatureCacheWriter::Close() {
  if (!out_.is_open()) return;
  out_.flush();
  const bool ok = static_cast<bool>(out_);
  out_.close();
  if (!ok) throw Error(ErrorCode::kIo, "write failed: " + path_.string());
}

FeatureCacheWriter::~FeatureCacheWriter() {
  try {
    Close();
  } catch (...) {
  }
}

void WriteFeatureCache(const std::filesystem::path& path, const FeatureCache& cache) {
  FeatureCacheWriter writer(path, cache.config_hash);
  for (const auto& r : cache.records) writer.Append(r);
  writer.Close();
}

FeatureCache ReadFeatureCache(const std::filesystem::path& path,
                              std::optional<std::uint64_t> expected_hash) {
  std::ifstream in = OpenBinary(path);
  Reader reader(in, path);
  CheckMagic(reader, kCacheMagic, path);
  FeatureCache cache;
  cache.config_hash = reader.Get<std::uint64_t>();
  const auto bands = reader.Get<std::uint32_t>();
  const auto frames = reader.Get<std::uint32_t>();
  const auto channels = reader.Get<std::uint32_t>();
  if (bands != kNumBands || frames != kNumFrames || channels != kNumChannels) {
    throw Error(ErrorCode::kShapeMismatch,
                "cache dims " + std::to_string(bands) + "x" + std::to_string(frames) + "x" +
                    std::to_string(channels) + " in " + path.string());
  }
  if (expected_hash && *expected_hash != cache.config_hash) {
    throw Error(ErrorCode::kConfigHashMismatch, "feature config differs in " + path.string());
  }
  while (!reader.AtEnd()) {
    FeatureTensor t;
    t.utt_id = reader.String();
    t.seg_index = reader.Get<std::uint32_t>();
    t.config_hash = cache.config_hash;
    t.data.resize(kFeatureSize);
    reader.Bytes(t.data.data(), kFeatureSize * sizeof(float));
    for (float v : t.data) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kCorrupt, "non-finite feature for " + t.utt_id + " in " + path.string());
      }
    }
    cache.records.push_back(std::move(t));
  }
  return cache;
}

void SaveCheckpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  const Model& model = checkpoint.model;
  const TrainConfig& cfg = checkpoint.config;
  out.write(kCheckpointMagic, 4);
  Put(out, kFormatVersion);
  PutString(out, model.arch.arch_id);
  Put(out, model.seed);
  Put(out, checkpoint.dev_eer);
  Put(out, checkpoint.epoch);
  Put(out, static_cast<std::uint64_t>(cfg.epochs));
  Put(out, static_cast<std::uint64_t>(cfg.batch_size));
  Put(out, cfg.lr);
  Put(out, cfg.seed);
  Put(out, static_cast<std::uint8_t>(cfg.class_weighting));
  Put(out, static_cast<std::uint8_t>(cfg.shuffle));
  Put(out, static_cast<std::uint32_t>(model.params.size()));
  Put(out, static_cast<std::uint64_t>(model.ParameterCount()));
  for (const auto& p : model.params) {
    PutString(out, p.name);
    Put(out, static_cast<std::uint32_t>(p.dims.size()));
    for (std::size_t d : p.dims) Put(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(p.data.data()),
              static_cast<std::streamsize>(p.data.size() * sizeof(float)));
  }
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

ModelCheckpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in = OpenBinary(path);
  Reader reader(in, path);
  CheckMagic(reader, kCheckpointMagic, path);

  ModelCheckpoint ckpt;
  const std::string arch_id = reader.String();
  Architecture arch;
  try {
    arch = ArchitectureFor(arch_id);
  } catch (const Error& e) {
    throw Error(ErrorCode::kArchMismatch, path.string() + ": " + e.what());
  }
  ckpt.model.arch = arch;
  ckpt.model.seed = reader.Get<std::uint64_t>();
  ckpt.dev_eer = reader.Get<double>();
  ckpt.epoch = reader.Get<std::uint32_t>();
  ckpt.config.epochs = reader.Get<std::uint64_t>();
  ckpt.config.batch_size = reader.Get<std::uint64_t>();
  ckpt.config.lr = reader.Get<double>();
  ckpt.config.seed = reader.Get<std::uint64_t>();
  ckpt.config.class_weighting = reader.Get<std::uint8_t>() != 0;
  ckpt.config.shuffle = reader.Get<std::uint8_t>() != 0;

  const auto layout = ParameterLayout(arch);
  std::size_t expected_scalars = 0;
  for (const auto& p : layout) {
    std::size_t n = 1;
    for (std::size_t d : p.dims) n *= d;
    expected_scalars += n;
  }
  const auto tensor_count = reader.Get<std::uint32_t>();
  const auto scalar_count = reader.Get<std::uint64_t>();
  if (tensor_count != layout.size() || scalar_count != expected_scalars) {
    throw Error(ErrorCode::kArchMismatch,
                path.string() + ": header declares " + std::to_string(tensor_count) + " tensors / " +
                    std::to_string(scalar_count) + " parameters, '" + arch_id + "' has " +
                    std::to_string(layout.size()) + " / " + std::to_string(expected_scalars));
  }
  for (const auto& expected : layout) {
    BasicParam<float> p;
    p.name = reader.String();
    const auto rank = reader.Get<std::uint32_t>();
    if (rank > 8) throw Error(ErrorCode::kCorrupt, path.string() + ": implausible rank");
    for (std::uint32_t r = 0; r < rank; ++r) p.dims.push_back(reader.Get<std::uint32_t>());
    if (p.name != expected.name || p.dims != expected.dims) {
      throw Error(ErrorCode::kArchMismatch,
                  path.string() + ": tensor '" + p.name + "' does not match '" + expected.name + "'");
    }
    std::size_t n = 1;
    for (std::size_t d : p.dims) n *= d;
    p.data.resize(n);
    reader.Bytes(p.data.data(), n * sizeof(float));
    ckpt.model.params.push_back(std::move(p));
  }
  if (!reader.AtEnd()) throw Error(ErrorCode::kCorrupt, path.string() + ": trailing bytes");
  return ckpt;
}

std::vector<EmbeddingRecord> ReadEmbeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string tag = path.stem().string();
  std::vector<EmbeddingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    EmbeddingRecord rec;
    rec.source_tag = tag;
    std::size_t pos = line.find('\t');
    rec.utt_id = line.substr(0, pos);
    if (rec.utt_id.empty()) {
      throw Error(ErrorCode::kNonNumericField, LineError(path, line_no, "empty utterance id"));
    }
    while (pos != std::string::npos) {
      const std::size_t start = pos + 1;
      pos = line.find('\t', start);
      const std::size_t end = pos == std::string::npos ? line.size() : pos;
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(line.data() + start, line.data() + end, v);
      if (ec != std::errc() || ptr != line.data() + end || !std::isfinite(v)) {
        throw Error(ErrorCode::kNonNumericField,
                    LineError(path, line_no, "bad value '" + line.substr(start, end - start) + "'"));
      }
      rec.vector.push_back(v);
    }
    if (records.empty()) {
      dim = rec.vector.size();
    } else if (rec.vector.size() != dim) {
      throw Error(ErrorCode::kRaggedRows,
                  LineError(path, line_no, std::to_string(rec.vector.size()) + " values, expected " +
                                               std::to_string(dim)));
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw Error(ErrorCode::kEmptyDataset, "no embeddings in " + path.string());
  if (dim != 192 && dim != 512 && dim != 1024) {
    throw Error(ErrorCode::kUnsupportedDim,
                path.string() + ": dimension " + std::to_string(dim) + " (expected 192, 512 or 1024)");
  }
  return records;
}

void WriteEmbeddings(const std::filesystem::path& path, std::span<const EmbeddingRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  char buf[32];
  for (const auto& r : records) {
    out << r.utt_id;
    for (float v : r.vector) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << '\t' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace adfd
