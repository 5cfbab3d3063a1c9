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

#include "cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <unordered_map>

#include "adfd/audio.h"
#include "adfd/error.h"
#include "adfd/parallel.h"
#include "adfd/protocol.h"
#include "adfd/scoring.h"
#include "adfd/spectral.h"
#include "adfd/train.h"

namespace adfd::cli {
namespace {

constexpr std::size_t kMaxListed = 20;

std::string JoinIds(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size() && i < kMaxListed; ++i) {
    if (i) s += ", ";
    s += ids[i];
  }
  if (ids.size() > kMaxListed) s += ", ... (" + std::to_string(ids.size()) + " total)";
  return s;
}

// Examples grouped per utterance, keeping first-appearance order.
struct Grouped {
  std::vector<std::string> order;
  std::unordered_map<std::string, Dataset> by_utt;
};

Grouped GroupByUtterance(Dataset data) {
  Grouped g;
  for (Example& e : data) {
    auto [it, inserted] = g.by_utt.try_emplace(e.utt_id);
    if (inserted) g.order.push_back(e.utt_id);
    it->second.push_back(std::move(e));
  }
  return g;
}

// Labels are irrelevant for scoring; every record gets label 0.
Dataset UnlabelledFromCache(const FeatureCache& cache) {
  Dataset d;
  d.reserve(cache.records.size());
  for (const auto& r : cache.records) d.push_back({r.utt_id, r.seg_index, r.data, kBonafide});
  return d;
}

Dataset UnlabelledFromEmbeddings(const std::vector<EmbeddingRecord>& records) {
  Dataset d;
  d.reserve(records.size());
  for (const auto& r : records) d.push_back({r.utt_id, 0, r.vector, kBonafide});
  return d;
}

}  // namespace

void RunExtract(const ExtractOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.dct_axis != "freq" && opts.dct_axis != "time") {
    throw Error(ErrorCode::kInvalidConfig, "--dct-axis must be freq or time");
  }
  const SpectralConfig config = RecipeConfig(
      opts.spec, opts.dct, opts.dct_axis == "time" ? DctAxis::kTime : DctAxis::kFrequency);
  config.Validate();
  const Protocol protocol = ParseProtocol(opts.protocol, ParseSubset(opts.subset));

  const std::size_t n = protocol.entries.size();
  std::vector<std::vector<FeatureTensor>> results(n);
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  ParallelFor(n, opts.jobs, [&](std::size_t i) {
    const TrialEntry& entry = protocol.entries[i];
    AudioClip clip = LoadAudio(opts.audio_dir / (entry.utt_id + opts.audio_ext));
    clip.utt_id = entry.utt_id;
    for (const Segment& seg : SegmentClip(clip)) results[i].push_back(ExtractFeatures(seg, config));
    const std::size_t finished = ++done;
    if (finished % 500 == 0) {
      std::lock_guard<std::mutex> lock(log_mutex);
      err << "extract: " << finished << "/" << n << " utterances\n";
    }
  });

  FeatureCacheWriter writer(opts.out, config.Hash());
  std::size_t segments = 0;
  for (const auto& utt : results) {
    for (const auto& t : utt) writer.Append(t);
    segments += utt.size();
  }
  writer.Close();
  out << "extracted " << segments << " segments from " << n << " utterances ("
      << protocol.bonafide_count() << " bonafide, " << protocol.spoof_count() << " spoof) with "
      << config.Describe() << " -> " << opts.out.string() << "\n";
}

void RunTrain(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  const Protocol train_protocol = ParseProtocol(opts.train_protocol, Subset::kTrain);
  const Protocol dev_protocol = ParseProtocol(opts.dev_protocol, Subset::kDev);
  const auto train_keys = train_protocol.Keys();
  const auto dev_keys = dev_protocol.Keys();

  Dataset train, dev;
  std::string arch_id;
  if (opts.arch == "cnn-baseline") {
    if (opts.train_cache.empty() || opts.dev_cache.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "cnn-baseline needs --train-cache and --dev-cache");
    }
    const FeatureCache train_cache = ReadFeatureCache(opts.train_cache);
    const FeatureCache dev_cache = ReadFeatureCache(opts.dev_cache, train_cache.config_hash);
    train = DatasetFromFeatures(train_cache.records, train_keys);
    dev = DatasetFromFeatures(dev_cache.records, dev_keys);
    arch_id = "cnn-baseline";
  } else if (opts.arch == "mlp-head") {
    if (opts.embeddings.empty() || opts.dev_embeddings.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "mlp-head needs --embeddings and --dev-embeddings");
    }
    const auto train_emb = ReadEmbeddings(opts.embeddings);
    const auto dev_emb = ReadEmbeddings(opts.dev_embeddings);
    if (train_emb.front().vector.size() != dev_emb.front().vector.size()) {
      throw Error(ErrorCode::kShapeMismatch, "train and dev embeddings differ in dimension");
    }
    train = DatasetFromEmbeddings(train_emb, train_keys);
    dev = DatasetFromEmbeddings(dev_emb, dev_keys);
    arch_id = "mlp-head:" + std::to_string(train_emb.front().vector.size());
  } else {
    throw Error(ErrorCode::kUnknownArch, "unknown --arch '" + opts.arch + "'");
  }

  TrainConfig config;
  config.epochs = opts.epochs;
  config.batch_size = opts.batch;
  config.lr = opts.lr;
  config.seed = opts.seed;
  config.class_weighting = !opts.no_class_weighting;
  config.shuffle = !opts.no_shuffle;

  err << "train: " << arch_id << " on " << train.size() << " examples, " << dev.size()
      << " dev examples\n";
  out << "epoch,loss,dev_eer\n";
  const ModelCheckpoint best = Train(arch_id, train, dev, config, [&](const EpochLog& log) {
    out << log.epoch << ',' << FormatScore(log.train_loss) << ',' << FormatScore(log.dev_eer) << '\n';
    out.flush();
  });
  SaveCheckpoint(opts.out, best);
  err << "train: kept epoch " << best.epoch << " (dev EER " << FormatScore(best.dev_eer) << ") -> "
      << opts.out.string() << "\n";
}

void RunScore(const ScoreOptions& opts, std::ostream& out, std::ostream& err) {
  const ModelCheckpoint ckpt = LoadCheckpoint(opts.checkpoint);
  const Protocol protocol = ParseProtocol(opts.protocol, Subset::kEval);
  if (opts.cache.empty() == opts.embeddings.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "give exactly one of --cache or --embeddings");
  }
  Grouped groups = GroupByUtterance(opts.cache.empty()
                                        ? UnlabelledFromEmbeddings(ReadEmbeddings(opts.embeddings))
                                        : UnlabelledFromCache(ReadFeatureCache(opts.cache)));

  std::vector<std::string> missing;
  for (const TrialEntry& e : protocol.entries) {
    if (!groups.by_utt.contains(e.utt_id)) missing.push_back(e.utt_id);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kMissingKey, std::to_string(missing.size()) +
                                            " protocol utterances have no features: " + JoinIds(missing));
  }

  const std::size_t n = protocol.entries.size();
  ScoreSet scores(n);
  ParallelFor(n, opts.jobs, [&](std::size_t i) {
    const std::string& id = protocol.entries[i].utt_id;
    const auto predictions = PredictSegments(ckpt.model, groups.by_utt.at(id));
    scores[i] = ClipScores(predictions).front();
  });
  WriteScores(opts.out, scores);
  out << "scored " << n << " utterances -> " << opts.out.string() << "\n";
  (void)err;
}

void RunEval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  const ScoreSet scores = ReadScores(opts.scores);
  const Protocol protocol = ParseProtocol(opts.protocol, Subset::kEval);
  const EvalReport report = ComputeMetrics(scores, protocol.Keys());
  std::filesystem::path det = opts.det_out;
  if (det.empty()) det = opts.scores.string() + ".det.csv";
  WriteDetCsv(det, report.det_points);

  nlohmann::ordered_json j;
  j["scores"] = opts.scores.string();
  j["num_bonafide"] = report.num_bonafide;
  j["num_spoof"] = report.num_spoof;
  j["accuracy"] = report.accuracy;
  j["f1"] = report.f1;
  j["auc"] = report.auc;
  j["eer"] = report.eer;
  j["eer_threshold"] = report.eer_threshold;
  j["det_csv"] = det.string();
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!opts.out.empty()) {
    std::ofstream file(opts.out, std::ios::trunc);
    if (!file || !(file << text)) throw Error(ErrorCode::kIo, "cannot write " + opts.out.string());
  }
  (void)err;
}

void RunFuse(const FuseOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.inputs.empty()) throw Error(ErrorCode::kEmptyInput, "no score files to fuse");
  std::vector<ScoreSet> systems;
  std::vector<std::map<std::string, double>> lookup;
  for (const auto& path : opts.inputs) {
    systems.push_back(ReadScores(path));
    std::map<std::string, double> m;
    for (const auto& e : systems.back()) {
      if (!m.emplace(e.utt_id, e.score).second) {
        throw Error(ErrorCode::kUtteranceMismatch, path.string() + ": duplicate " + e.utt_id);
      }
    }
    lookup.push_back(std::move(m));
  }
  for (std::size_t s = 1; s < systems.size(); ++s) {
    std::vector<std::string> diff;
    for (const auto& [id, v] : lookup[0]) {
      if (!lookup[s].contains(id)) diff.push_back(id);
    }
    for (const auto& [id, v] : lookup[s]) {
      if (!lookup[0].contains(id)) diff.push_back(id);
    }
    if (!diff.empty()) {
      throw Error(ErrorCode::kUtteranceMismatch,
                  opts.inputs[0].string() + " and " + opts.inputs[s].string() +
                      " differ in utterances: " + JoinIds(diff));
    }
  }

  ScoreSet fused;
  fused.reserve(systems[0].size());
  std::vector<ProbVector> probs(systems.size());
  for (const auto& e : systems[0]) {
    for (std::size_t s = 0; s < systems.size(); ++s) {
      const double score = lookup[s].at(e.utt_id);
      probs[s] = ProbVector{{score, 1.0 - score}};
    }
    fused.push_back({e.utt_id, FuseMean(probs).bonafide()});
  }
  WriteScores(opts.out, fused);
  out << "fused " << systems.size() << " systems over " << fused.size() << " utterances -> "
      << opts.out.string() << "\n";
  (void)err;
}

// Flat key=value config: every key the command line does not already set
// becomes a --key=value flag right after the subcommand.
std::vector<std::string> ExpandConfig(const std::vector<std::string>& args) {
  std::string path;
  std::size_t at = 0;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      at = i;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      at = i;
    }
  }
  if (at == 0) return args;
  auto given = [&](const std::string& key) {
    for (std::size_t i = 2; i < args.size(); ++i) {
      if (args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> extra;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--" || item.name == "config") continue;
    if (!item.parents.empty() && item.parents != std::vector<std::string>{args[1]}) continue;
    if (given(item.name)) continue;
    for (const std::string& value : item.inputs) extra.push_back("--" + item.name + "=" + value);
  }
  std::vector<std::string> expanded(args.begin(), args.begin() + 2);
  expanded.insert(expanded.end(), extra.begin(), extra.end());
  expanded.insert(expanded.end(), args.begin() + 2, args.end());
  return expanded;
}

int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrogram-based audio deepfake detection toolkit", "adfd"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::string config_path;

  std::vector<std::string> spec_names;
  for (auto name : RecipeNames()) spec_names.emplace_back(name);

  ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "Extract 64x64x3 features for a protocol's audio");
  extract->add_option("--config", config_path, "Flat key=value config file (flags win)");
  extract->add_option("--protocol", ex.protocol, "Protocol file")->required()->check(CLI::ExistingFile);
  extract->add_option("--audio-dir", ex.audio_dir, "Directory of <utt_id>.wav files")
      ->required()
      ->check(CLI::ExistingDirectory);
  extract->add_option("--out", ex.out, "Output feature cache")->required();
  extract->add_option("--spec", ex.spec, "Spectrogram recipe")->required()->check(CLI::IsMember(spec_names));
  extract->add_flag("--dct", ex.dct, "Apply an orthonormal DCT-II");
  extract->add_option("--dct-axis", ex.dct_axis, "DCT axis")->check(CLI::IsMember({"freq", "time"}));
  extract->add_option("--subset", ex.subset, "Protocol subset tag")
      ->check(CLI::IsMember({"train", "dev", "eval"}));
  extract->add_option("--audio-ext", ex.audio_ext, "Audio file extension");
  extract->add_option("--jobs", ex.jobs, "Worker threads")->check(CLI::PositiveNumber);

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train a detector, keeping the best dev-EER epoch");
  train->add_option("--config", config_path, "Flat key=value config file (flags win)");
  train->add_option("--arch", tr.arch, "Architecture")->check(CLI::IsMember({"cnn-baseline", "mlp-head"}));
  train->add_option("--train-cache", tr.train_cache, "Training feature cache")->check(CLI::ExistingFile);
  train->add_option("--dev-cache", tr.dev_cache, "Dev feature cache")->check(CLI::ExistingFile);
  train->add_option("--train-protocol", tr.train_protocol, "Training protocol")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--dev-protocol", tr.dev_protocol, "Dev protocol")->required()->check(CLI::ExistingFile);
  train->add_option("--embeddings", tr.embeddings, "Training embeddings TSV (mlp-head)")
      ->check(CLI::ExistingFile);
  train->add_option("--dev-embeddings", tr.dev_embeddings, "Dev embeddings TSV (mlp-head)")
      ->check(CLI::ExistingFile);
  train->add_option("--out", tr.out, "Output checkpoint")->required();
  train->add_option("--epochs", tr.epochs, "Training epochs");
  train->add_option("--batch", tr.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  train->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  train->add_option("--seed", tr.seed, "Random seed");
  train->add_flag("--no-class-weighting", tr.no_class_weighting, "Disable inverse-frequency class weights");
  train->add_flag("--no-shuffle", tr.no_shuffle, "Keep the training order fixed");

  ScoreOptions sc;
  auto* score = app.add_subcommand("score", "Score utterances with a checkpoint");
  score->add_option("--config", config_path, "Flat key=value config file (flags win)");
  score->add_option("--checkpoint", sc.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  score->add_option("--cache", sc.cache, "Feature cache")->check(CLI::ExistingFile);
  score->add_option("--embeddings", sc.embeddings, "Embeddings TSV")->check(CLI::ExistingFile);
  score->add_option("--protocol", sc.protocol, "Protocol listing the utterances")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--out", sc.out, "Output score file")->required();
  score->add_option("--jobs", sc.jobs, "Worker threads")->check(CLI::PositiveNumber);

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Compute EER, AUC, accuracy and F1 for a score file");
  eval->add_option("--config", config_path, "Flat key=value config file (flags win)");
  eval->add_option("--scores", ev.scores, "Score file")->required()->check(CLI::ExistingFile);
  eval->add_option("--protocol", ev.protocol, "Protocol with keys")->required()->check(CLI::ExistingFile);
  eval->add_option("--det-out", ev.det_out, "DET CSV output (default <scores>.det.csv)");
  eval->add_option("--out", ev.out, "Also write the JSON report here");

  FuseOptions fu;
  auto* fuse = app.add_subcommand("fuse", "Mean-fuse score files over the same utterances");
  fuse->add_option("--config", config_path, "Flat key=value config file (flags win)");
  fuse->add_option("inputs", fu.inputs, "Score files")->required()->check(CLI::ExistingFile);
  fuse->add_option("--out", fu.out, "Output score file")->required();

  // CLI11 wants the arguments without the program name, last first.
  try {
    const std::vector<std::string> expanded = args.size() > 2 ? ExpandConfig(args) : args;
    std::vector<std::string> reversed(expanded.size() > 1 ? expanded.begin() + 1 : expanded.end(), expanded.end());
    std::reverse(reversed.begin(), reversed.end());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "adfd: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    if (extract->parsed()) RunExtract(ex, out, err);
    if (train->parsed()) RunTrain(tr, out, err);
    if (score->parsed()) RunScore(sc, out, err);
    if (eval->parsed()) RunEval(ev, out, err);
    if (fuse->parsed()) RunFuse(fu, out, err);
  } catch (const Error& e) {
    err << "adfd: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "adfd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace adfd::cli
