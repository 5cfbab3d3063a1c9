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

#include "adfd/train.h"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "adfd/error.h"

namespace adfd {
namespace {

constexpr std::size_t kPredictBatch = 32;
constexpr std::uint64_t kDropoutStream = 0x64726f706f7574ULL;

int LookupLabel(const std::map<std::string, int>& labels, const std::string& utt_id) {
  const auto it = labels.find(utt_id);
  if (it == labels.end()) throw Error(ErrorCode::kMissingKey, "no label for " + utt_id);
  return it->second;
}

Tensor4 MakeBatch(const Architecture& arch, std::span<const Example> examples,
                  std::span<const std::size_t> indices) {
  Tensor4 batch(indices.size(), arch.input[0], arch.input[1], arch.input[2]);
  const std::size_t size = arch.input_size();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Example& e = examples[indices[b]];
    if (e.features.size() != size) {
      throw Error(ErrorCode::kShapeMismatch,
                  e.utt_id + ": " + std::to_string(e.features.size()) + " features, '" +
                      arch.arch_id + "' expects " + std::to_string(size));
    }
    std::copy(e.features.begin(), e.features.end(), batch.sample(b).begin());
  }
  return batch;
}

void CheckLabels(std::span<const Example> data, const char* what) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, std::string(what) + " set is empty");
  for (const Example& e : data) {
    if (e.label != kBonafide && e.label != kSpoof) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  e.utt_id + ": label " + std::to_string(e.label));
    }
  }
}

}  // namespace

Dataset DatasetFromFeatures(std::span<const FeatureTensor> tensors,
                            const std::map<std::string, int>& labels) {
  Dataset data;
  data.reserve(tensors.size());
  for (const FeatureTensor& t : tensors) {
    data.push_back({t.utt_id, t.seg_index, t.data, LookupLabel(labels, t.utt_id)});
  }
  return data;
}

Dataset DatasetFromEmbeddings(std::span<const EmbeddingRecord> records,
                              const std::map<std::string, int>& labels) {
  Dataset data;
  data.reserve(records.size());
  for (const EmbeddingRecord& r : records) {
    data.push_back({r.utt_id, 0, r.vector, LookupLabel(labels, r.utt_id)});
  }
  return data;
}

std::vector<std::size_t> EpochOrder(std::size_t n, std::uint64_t seed, std::size_t epoch,
                                    bool shuffle) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!shuffle || n < 2) return order;
  Rng rng = Rng::ForStream(seed, epoch);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.Below(i + 1)]);
  }
  return order;
}

std::vector<SegmentPrediction> PredictSegments(const Model& model, std::span<const Example> examples) {
  std::vector<SegmentPrediction> out;
  out.reserve(examples.size());
  std::vector<std::size_t> indices;
  for (std::size_t start = 0; start < examples.size(); start += kPredictBatch) {
    const std::size_t end = std::min(examples.size(), start + kPredictBatch);
    indices.resize(end - start);
    std::iota(indices.begin(), indices.end(), start);
    const auto probs = Forward(model, MakeBatch(model.arch, examples, indices), RunMode::Eval());
    if (probs.cols != 2) throw Error(ErrorCode::kShapeMismatch, "expected a 2-class model");
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const Example& e = examples[indices[b]];
      out.push_back({e.utt_id, e.seg_index, ProbVector{{probs(b, 0), probs(b, 1)}}});
    }
  }
  return out;
}

ScoreSet ClipScores(std::span<const SegmentPrediction> predictions) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<ProbVector>> groups;
  for (const SegmentPrediction& p : predictions) {
    auto [it, inserted] = groups.try_emplace(p.utt_id);
    if (inserted) order.push_back(p.utt_id);
    it->second.push_back(p.probs);
  }
  ScoreSet scores;
  scores.reserve(order.size());
  for (const std::string& id : order) {
    scores.push_back({id, AggregateClip(groups.at(id)).bonafide()});
  }
  return scores;
}

double DatasetEer(const Model& model, std::span<const Example> dev) {
  std::map<std::string, int> keys;
  for (const Example& e : dev) keys[e.utt_id] = e.label;
  const ScoreSet scores = ClipScores(PredictSegments(model, dev));
  std::vector<double> bonafide, spoof;
  for (const ScoreEntry& s : scores) {
    (keys.at(s.utt_id) == kBonafide ? bonafide : spoof).push_back(s.score);
  }
  return ComputeEer(bonafide, spoof).eer;
}

ModelCheckpoint Train(std::string_view arch_id, std::span<const Example> train,
                      std::span<const Example> dev, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  return Train(ArchitectureFor(arch_id), train, dev, config, on_epoch);
}

ModelCheckpoint Train(const Architecture& arch, std::span<const Example> train,
                      std::span<const Example> dev, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  CheckLabels(train, "training");
  CheckLabels(dev, "dev");
  if (config.batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "batch size must be >= 1");

  Model model = InitModel<float>(arch, config.seed);
  ModelCheckpoint best{model, config, 0, DatasetEer(model, dev)};
  if (config.epochs == 0) return best;

  std::vector<double> class_weights;
  if (config.class_weighting) {
    std::array<std::size_t, 2> counts{0, 0};
    for (const Example& e : train) ++counts[static_cast<std::size_t>(e.label)];
    for (std::size_t c : counts) {
      class_weights.push_back(c == 0 ? 1.0
                                     : static_cast<double>(train.size()) /
                                           (2.0 * static_cast<double>(c)));
    }
  }

  AdamState<float> adam = AdamState<float>::ForModel(model, config.lr);
  std::vector<int> labels;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = EpochOrder(train.size(), config.seed, epoch, config.shuffle);
    Rng dropout = Rng::ForStream(config.seed ^ kDropoutStream, epoch);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      labels.resize(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) labels[b] = train[idx[b]].label;
      const auto result = LossAndGrads(model, MakeBatch(arch, train, idx), labels,
                                       RunMode::Train(dropout), class_weights);
      AdamStep(model, result.grads, adam);
      loss_sum += static_cast<double>(result.loss) * static_cast<double>(idx.size());
    }
    const double dev_eer = DatasetEer(model, dev);
    const EpochLog log{epoch, loss_sum / static_cast<double>(train.size()), dev_eer};
    if (on_epoch) on_epoch(log);
    if (best.epoch == 0 || dev_eer < best.dev_eer) {
      best = ModelCheckpoint{model, config, static_cast<std::uint32_t>(epoch), dev_eer};
    }
  }
  return best;
}

}  // namespace adfd
