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

#include "adfd/scoring.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "adfd/error.h"

namespace adfd {
namespace {

struct SweepPoint {
  double threshold;
  double far;
  double frr;
};

// Operating points at every distinct score, ascending, followed by the
// reject-everything point.
std::vector<SweepPoint> Sweep(std::span<const double> bonafide, std::span<const double> spoof,
                              bool with_sentinel) {
  if (bonafide.empty() || spoof.empty()) {
    throw Error(ErrorCode::kEmptyClass, "need at least one bonafide and one spoof score");
  }
  std::vector<double> b(bonafide.begin(), bonafide.end());
  std::vector<double> s(spoof.begin(), spoof.end());
  std::sort(b.begin(), b.end());
  std::sort(s.begin(), s.end());
  std::vector<double> thresholds;
  thresholds.reserve(b.size() + s.size());
  std::merge(b.begin(), b.end(), s.begin(), s.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const auto nb = static_cast<double>(b.size());
  const auto ns = static_cast<double>(s.size());
  std::vector<SweepPoint> points;
  points.reserve(thresholds.size() + 1);
  std::size_t bi = 0, si = 0;  // counts of scores strictly below the threshold
  for (double t : thresholds) {
    while (bi < b.size() && b[bi] < t) ++bi;
    while (si < s.size() && s[si] < t) ++si;
    points.push_back({t, static_cast<double>(s.size() - si) / ns, static_cast<double>(bi) / nb});
  }
  if (with_sentinel) points.push_back({thresholds.back(), 0.0, 1.0});
  return points;
}

void CheckProb(const ProbVector& p) {
  for (double v : p.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kEmptyInput, "non-finite probability");
  }
}

}  // namespace

ProbVector AggregateClip(std::span<const ProbVector> segment_probs) {
  if (segment_probs.empty()) throw Error(ErrorCode::kEmptyInput, "no segment probabilities");
  ProbVector out{{0.0, 0.0}};
  for (const ProbVector& p : segment_probs) {
    CheckProb(p);
    out.values[0] += p.values[0];
    out.values[1] += p.values[1];
  }
  const auto n = static_cast<double>(segment_probs.size());
  out.values[0] /= n;
  out.values[1] /= n;
  return out;
}

ProbVector FuseMean(std::span<const ProbVector> system_probs) {
  if (system_probs.empty()) throw Error(ErrorCode::kEmptyInput, "no systems to fuse");
  // Same arithmetic as the clip-level mean, taken over systems.
  return AggregateClip(system_probs);
}

ProbVector FuseMean(std::span<const std::pair<std::string, ProbVector>> system_probs) {
  if (system_probs.empty()) throw Error(ErrorCode::kEmptyInput, "no systems to fuse");
  std::vector<ProbVector> probs;
  probs.reserve(system_probs.size());
  for (const auto& [utt, p] : system_probs) {
    if (utt != system_probs.front().first) {
      throw Error(ErrorCode::kUtteranceMismatch,
                  "fusing '" + system_probs.front().first + "' with '" + utt + "'");
    }
    probs.push_back(p);
  }
  return FuseMean(probs);
}

int Decide(const ProbVector& p) { return p.values[1] > p.values[0] ? kSpoof : kBonafide; }

EerResult ComputeEer(std::span<const double> bonafide_scores, std::span<const double> spoof_scores) {
  const auto points = Sweep(bonafide_scores, spoof_scores, /*with_sentinel=*/true);
  // FAR - FRR is +1 at the lowest threshold and -1 at the sentinel.
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = points[i].far - points[i].frr;
    if (d > 0.0) continue;
    if (d == 0.0) return {points[i].far, points[i].threshold};
    const SweepPoint& a = points[i - 1];
    const SweepPoint& b = points[i];
    const double da = a.far - a.frr;
    const double alpha = da / (da - d);
    return {a.far + alpha * (b.far - a.far), a.threshold + alpha * (b.threshold - a.threshold)};
  }
  return {points.back().far, points.back().threshold};  // unreachable
}

double ComputeAuc(std::span<const double> bonafide_scores, std::span<const double> spoof_scores) {
  const auto points = Sweep(bonafide_scores, spoof_scores, /*with_sentinel=*/true);
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double tpr_a = 1.0 - points[i].frr;
    const double tpr_b = 1.0 - points[i + 1].frr;
    area += (points[i].far - points[i + 1].far) * 0.5 * (tpr_a + tpr_b);
  }
  return area;
}

std::vector<DetPoint> ComputeDet(std::span<const double> bonafide_scores,
                                 std::span<const double> spoof_scores) {
  const auto points = Sweep(bonafide_scores, spoof_scores, /*with_sentinel=*/false);
  std::vector<DetPoint> det;
  det.reserve(points.size());
  for (const auto& p : points) det.push_back({p.threshold, p.far, p.frr});
  return det;
}

EvalReport ComputeMetrics(const ScoreSet& scores, const std::map<std::string, int>& keys) {
  std::vector<double> bonafide, spoof;
  std::set<std::string> seen;
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (const ScoreEntry& e : scores) {
    if (!seen.insert(e.utt_id).second) {
      throw Error(ErrorCode::kUtteranceMismatch, "duplicate score for " + e.utt_id);
    }
    if (!std::isfinite(e.score)) {
      throw Error(ErrorCode::kNonNumericField, "non-finite score for " + e.utt_id);
    }
    const auto it = keys.find(e.utt_id);
    if (it == keys.end()) throw Error(ErrorCode::kMissingKey, "no key for " + e.utt_id);
    const int truth = it->second;
    (truth == kBonafide ? bonafide : spoof).push_back(e.score);
    const int predicted = Decide(ProbVector{{e.score, 1.0 - e.score}});
    if (predicted == truth) ++correct;
    if (predicted == kSpoof && truth == kSpoof) ++tp;
    if (predicted == kSpoof && truth == kBonafide) ++fp;
    if (predicted == kBonafide && truth == kSpoof) ++fn;
  }
  EvalReport report;
  const EerResult eer = ComputeEer(bonafide, spoof);
  report.eer = eer.eer;
  report.eer_threshold = eer.threshold;
  report.auc = ComputeAuc(bonafide, spoof);
  report.det_points = ComputeDet(bonafide, spoof);
  report.num_bonafide = bonafide.size();
  report.num_spoof = spoof.size();
  report.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
  const std::size_t denom = 2 * tp + fp + fn;
  report.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return report;
}

std::string FormatScore(double score) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", score);
  return buf;
}

void WriteScores(const std::filesystem::path& path, const ScoreSet& scores) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  for (const ScoreEntry& e : scores) out << e.utt_id << ' ' << FormatScore(e.score) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

ScoreSet ReadScores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  ScoreSet scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string id, value, extra;
    if (!(fields >> id)) continue;  // blank line
    if (!(fields >> value) || (fields >> extra)) {
      throw Error(ErrorCode::kMalformedLine,
                  path.string() + ":" + std::to_string(line_no) + ": expected '<utt_id> <score>'");
    }
    std::size_t used = 0;
    double score = 0.0;
    try {
      score = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || !std::isfinite(score)) {
      throw Error(ErrorCode::kNonNumericField,
                  path.string() + ":" + std::to_string(line_no) + ": bad score '" + value + "'");
    }
    scores.push_back({id, score});
  }
  return scores;
}

void WriteDetCsv(const std::filesystem::path& path, std::span<const DetPoint> points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  out << "threshold,far,frr\n";
  for (const DetPoint& p : points) {
    out << FormatScore(p.threshold) << ',' << FormatScore(p.far) << ',' << FormatScore(p.frr) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace adfd
