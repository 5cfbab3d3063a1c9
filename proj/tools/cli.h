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

#ifndef ADFD_TOOLS_CLI_H_
#define ADFD_TOOLS_CLI_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace adfd::cli {

struct ExtractOptions {
  std::filesystem::path protocol;
  std::filesystem::path audio_dir;
  std::filesystem::path out;
  std::string spec;
  bool dct = false;
  std::string dct_axis = "freq";
  std::string subset = "train";
  std::string audio_ext = ".wav";
  int jobs = 1;
};

struct TrainOptions {
  std::string arch = "cnn-baseline";
  std::filesystem::path train_cache;
  std::filesystem::path dev_cache;
  std::filesystem::path train_protocol;
  std::filesystem::path dev_protocol;
  std::filesystem::path embeddings;
  std::filesystem::path dev_embeddings;
  std::filesystem::path out;
  std::size_t epochs = 50;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  bool no_class_weighting = false;
  bool no_shuffle = false;
};

struct ScoreOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path cache;
  std::filesystem::path embeddings;
  std::filesystem::path protocol;
  std::filesystem::path out;
  int jobs = 1;
};

struct EvalOptions {
  std::filesystem::path scores;
  std::filesystem::path protocol;
  std::filesystem::path det_out;
  std::filesystem::path out;
};

struct FuseOptions {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out;
};

// Each command throws adfd::Error on failure; `out` receives the command's
// regular output, `err` progress and diagnostics.
void RunExtract(const ExtractOptions& opts, std::ostream& out, std::ostream& err);
void RunTrain(const TrainOptions& opts, std::ostream& out, std::ostream& err);
void RunScore(const ScoreOptions& opts, std::ostream& out, std::ostream& err);
void RunEval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
void RunFuse(const FuseOptions& opts, std::ostream& out, std::ostream& err);

// Parses argv-style arguments (args[0] is the program name) and dispatches.
// Returns 0 on success, 2 on a usage error, 1 on a runtime error.
int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adfd::cli

#endif  // ADFD_TOOLS_CLI_H_
