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

#ifndef ADFD_SCORING_H_
#define ADFD_SCORING_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace adfd {

inline constexpr int kBonafide = 0;
inline constexpr int kSpoof = 1;

// Class probabilities, index 0 = bonafide, index 1 = spoof.
struct ProbVector {
  std::array<double, 2> values{0.5, 0.5};

  double bonafide() const { return values[0]; }
  double spoof() const { return values[1]; }
  bool operator==(const ProbVector&) const = default;
};

// Per-utterance detection scores; higher means more bonafide.
struct ScoreEntry {
  std::string utt_id;
  double score = 0.0;
};
using ScoreSet = std::vector<ScoreEntry>;

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;  // spoof accepted / spoof
  double frr = 0.0;  // bonafide rejected / bonafide
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::size_t num_bonafide = 0;
  std::size_t num_spoof = 0;
  std::vector<DetPoint> det_points;
};

// Mean of the segment probability vectors of one clip.
// Throws Error(kEmptyInput).
ProbVector AggregateClip(std::span<const ProbVector> segment_probs);

// Mean over systems of their clip-level vectors for one utterance.
// Throws Error(kEmptyInput).
ProbVector FuseMean(std::span<const ProbVector> system_probs);

// Same, with a check that every system scored the same utterance.
// Throws Error(kEmptyInput) or Error(kUtteranceMismatch).
ProbVector FuseMean(std::span<const std::pair<std::string, ProbVector>> system_probs);

// Index of the largest class probability; exact ties go to bonafide.
int Decide(const ProbVector& p);

// Equal error rate over a threshold sweep at every distinct score (accept iff
// score >= t), plus the reject-everything point above the top score. Where
// FAR - FRR changes sign between two adjacent operating points the crossing is
// linearly interpolated; the threshold is interpolated the same way (the
// reject-everything point reuses the top score as its threshold).
// Throws Error(kEmptyClass).
EerResult ComputeEer(std::span<const double> bonafide_scores, std::span<const double> spoof_scores);

// ROC area with bonafide as the positive class, trapezoidal over distinct
// thresholds (equal to the pair-ordering probability with ties counted 1/2).
double ComputeAuc(std::span<const double> bonafide_scores, std::span<const double> spoof_scores);

// One DET point per distinct score, thresholds ascending.
std::vector<DetPoint> ComputeDet(std::span<const double> bonafide_scores,
                                 std::span<const double> spoof_scores);

// keys maps utt_id to kBonafide / kSpoof. Hard decisions treat a score as
// p_bonafide and apply Decide to (score, 1 - score); F1 counts spoof as the
// positive class.
// Throws Error(kMissingKey) or Error(kEmptyClass).
EvalReport ComputeMetrics(const ScoreSet& scores, const std::map<std::string, int>& keys);

// "<utt_id> <score>" lines, score with 9 significant digits.
void WriteScores(const std::filesystem::path& path, const ScoreSet& scores);
ScoreSet ReadScores(const std::filesystem::path& path);
std::string FormatScore(double score);

// CSV with header "threshold,far,frr".
void WriteDetCsv(const std::filesystem::path& path, std::span<const DetPoint> points);

}  // namespace adfd

#endif  // ADFD_SCORING_H_
