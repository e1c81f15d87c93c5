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
#include <iosfwd>
#include <optional>
#include <vector>

#include "nmt/nao/surrogate.h"
#include "nmt/seq2seq/beam.h"
#include "nmt/seq2seq/model.h"
#include "nmt/seq2seq/training.h"

namespace nmt::nao {

struct PerfRecord {
  Genotype genotype;
  double y = 0.0;  // dev BLEU / 100
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::size_t iteration = 0;  // 0 is the seed pool
  friend bool operator==(const PerfRecord&, const PerfRecord&) = default;
};

// Trains the supernet for `steps` batches, each under a uniformly sampled
// genotype. Leaves the supernet's active genotype unchanged.
void train_supernet(Model& supernet, const std::vector<SentencePair>& data, std::size_t steps,
                    std::size_t batch_size, num::Adam& adam, num::Rng& rng);

struct EvalConfig {
  std::size_t budget = 0;  // extra sampled-genotype steps on a private copy
  std::size_t batch_size = 16;
  num::AdamConfig adam;
  BeamConfig beam{.beam = 1};
};

// Scores `genotype` on `dev` through the shared weights.
PerfRecord shared_weight_eval(const Model& supernet, const Genotype& genotype, const std::vector<SentencePair>& train,
                              const std::vector<SentencePair>& dev, const EvalConfig& cfg, std::uint64_t seed);

struct SearchConfig {
  std::size_t pool = 50;
  std::size_t iterations = 5;
  std::size_t top_k = 5;
  // Step sizes tried in turn until the decoded architecture is new.
  std::vector<double> eta_schedule{1.0, 2.0, 4.0};
  std::size_t supernet_steps = 300;
  std::size_t batch_size = 16;
  num::AdamConfig supernet_adam{.lr = 2e-3};
  EvalConfig eval;
  SurrogateConfig surrogate;
  SurrogateTrainConfig surrogate_train;
};

// Line format, one record per line, tab separated:
//   <iteration> <y> <seed> <budget> <genotype text>
// and `#done <iteration>` after an iteration's records.
void write_record(std::ostream& out, const PerfRecord& r);
struct ArchiveFile {
  std::vector<PerfRecord> records;  // complete iterations only
  std::size_t completed = 0;        // iterations with a #done marker
};
// Throws Error("archive line N: ...") on malformed content.
ArchiveFile read_archive(std::istream& in);

struct SearchResult {
  std::vector<PerfRecord> archive;  // best first
  std::vector<double> best_so_far;  // per iteration, seed pool first
  Model supernet;
};

// Seed pool, then `iterations` rounds of fit, ascend, decode, dedupe and
// evaluate. With `archive_path`, records are appended as they are produced
// and an existing archive is resumed from its last complete iteration.
SearchResult nao_search(const ModelConfig& model, const std::vector<SentencePair>& train,
                        const std::vector<SentencePair>& dev, const SearchConfig& cfg, std::uint64_t seed,
                        const std::optional<std::filesystem::path>& archive_path = std::nullopt);

}  // namespace nmt::nao
