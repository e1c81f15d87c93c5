/* desknmt - a desk-scale neural machine translation research toolkit.
 * Copyright (C) 2026 The desknmt Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nmt/app/config.h"
#include "nmt/pipeline/bpe.h"
#include "nmt/seq2seq/training.h"
#include "nmt/seq2seq/vocab.h"

namespace nmt::app {

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& msg) : Error("stage " + stage + ": " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ScoreRow {
  std::string stage;
  std::string system;
  double dev_bleu;
  double test_bleu;
};

struct TaskCorpora {
  Vocabulary vocab;
  std::optional<pipeline::BpeModel> bpe;
  std::vector<SentencePair> bitext, noisy, dev, test;
  std::vector<TokenSequence> mono_x, mono_y;
};

// Synthetic generator or files, per [task].
TaskCorpora load_task(const ExperimentConfig& cfg, std::uint64_t seed);

std::string scores_tsv(const std::vector<ScoreRow>& rows);
std::string scores_markdown(const std::string& title, const std::vector<ScoreRow>& rows);

struct RunResult {
  std::vector<ScoreRow> rows;
  std::filesystem::path dir;
};

// Runs the configured stages, writing under `dir`: config.ini, vocab.txt,
// checkpoints/, scores.tsv, scores.md and stage-specific files. Failures
// are rethrown as StageError.
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace nmt::app
