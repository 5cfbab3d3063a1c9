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

#ifndef ADFD_TRAIN_H_
#define ADFD_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adfd/nn.h"
#include "adfd/scoring.h"
#include "adfd/spectral.h"

namespace adfd {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  // Inverse-frequency class weights in the loss.
  bool class_weighting = true;
  bool shuffle = true;
};

// One externally computed utterance embedding (192, 512 or 1024 dims).
struct EmbeddingRecord {
  std::string utt_id;
  std::vector<float> vector;
  std::string source_tag;
};

// A labelled network input: a flattened feature tensor or an embedding.
struct Example {
  std::string utt_id;
  std::uint32_t seg_index = 0;
  std::vector<float> features;
  int label = kBonafide;
};
using Dataset = std::vector<Example>;

struct ModelCheckpoint {
  Model model;
  TrainConfig config;
  std::uint32_t epoch = 0;  // 0 = untrained initialization
  double dev_eer = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_eer = 0.0;
};
using EpochCallback = std::function<void(const EpochLog&)>;

struct SegmentPrediction {
  std::string utt_id;
  std::uint32_t seg_index = 0;
  ProbVector probs;
};

// labels maps utt_id to kBonafide / kSpoof.
// Throws Error(kMissingKey).
Dataset DatasetFromFeatures(std::span<const FeatureTensor> tensors,
                            const std::map<std::string, int>& labels);
Dataset DatasetFromEmbeddings(std::span<const EmbeddingRecord> records,
                              const std::map<std::string, int>& labels);

// Visiting order of n training examples in a given epoch; a pure function of
// (seed, epoch). Identity when shuffle is false.
std::vector<std::size_t> EpochOrder(std::size_t n, std::uint64_t seed, std::size_t epoch,
                                    bool shuffle);

// Eval-mode probabilities, one per example, in input order, computed in
// consecutive batches of 32. Output is bit-reproducible for the same input
// sequence; an example batched with different neighbours can differ in the
// last bits.
// Throws Error(kShapeMismatch).
std::vector<SegmentPrediction> PredictSegments(const Model& model, std::span<const Example> examples);

// Clip-level scores (aggregated p_bonafide) in order of first appearance.
ScoreSet ClipScores(std::span<const SegmentPrediction> predictions);

// Clip-level EER of a model on a labelled set, via ComputeEer.
double DatasetEer(const Model& model, std::span<const Example> dev);

// Mini-batch Adam training with dev-set model selection: after every epoch
// the clip-level dev EER is measured and the checkpoint with the lowest EER
// is kept (earliest epoch on ties). epochs == 0 returns the initialization.
// Throws Error(kEmptyDataset) or Error(kLabelOutOfRange).
ModelCheckpoint Train(std::string_view arch_id, std::span<const Example> train,
                      std::span<const Example> dev, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});
ModelCheckpoint Train(const Architecture& arch, std::span<const Example> train,
                      std::span<const Example> dev, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

}  // namespace adfd

#endif  // ADFD_TRAIN_H_
