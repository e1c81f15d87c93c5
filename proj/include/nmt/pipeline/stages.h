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

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nmt/madl/madl.h"
#include "nmt/numerics/adam.h"
#include "nmt/pipeline/corpus.h"
#include "nmt/pipeline/noise.h"
#include "nmt/seq2seq/beam.h"

namespace nmt::pipeline {

struct TrainSpec {
  ModelConfig model;
  std::optional<Genotype> genotype;  // Transformer when unset
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  num::AdamConfig adam;
};

Model new_model(const TrainSpec& spec, std::uint64_t seed);
// Runs `epochs` shuffled passes; returns the mean loss of the last one.
double train_epochs(Model& model, num::Adam& adam, const std::vector<SentencePair>& data, std::size_t epochs,
                    std::size_t batch_size, num::Rng& rng);
Model train_model(const std::vector<SentencePair>& data, const TrainSpec& spec, std::uint64_t seed);

double dev_bleu(const Model& model, const std::vector<SentencePair>& dev, const BeamConfig& beam);

// Synthetic source = noised translation of each monolingual target sentence
// by the reverse model; failed decodes are skipped with a warning.
ParallelCorpus back_translate(const Model& reverse, const std::vector<TokenSequence>& mono, const BeamConfig& beam,
                              const NoiseConfig& noise, num::Rng& rng);
// Sequence-level distillation: (s, teacher translation of s).
ParallelCorpus distill(const madl::AgentEnsemble& teachers, const std::vector<TokenSequence>& sources,
                       const BeamConfig& beam);
ParallelCorpus distill(const Model& teacher, const std::vector<TokenSequence>& sources, const BeamConfig& beam);

struct BtKdConfig {
  std::size_t rounds = 1;
  bool use_bt = true;
  bool use_kd = true;
  std::size_t bitext_upsample = 1;
  std::size_t bt_upsample = 1;
  std::size_t kd_upsample = 1;
  // Retrain each round from a fresh initialisation instead of continuing.
  bool from_scratch = true;
  BeamConfig beam{.beam = 5};
  NoiseConfig noise;
  TrainSpec train;
  // A round whose dev BLEU falls more than this below the best is flagged
  // and its models discarded.
  double tolerance = 0.0;
};

struct RoundRecord {
  std::size_t round;
  double fwd_bleu;
  double bwd_bleu;
  bool flagged;
};

struct BtKdResult {
  Model fwd;
  Model bwd;
  std::vector<RoundRecord> archive;
  // Training mix behind the current forward model (the bitext when no round
  // was accepted).
  ParallelCorpus fwd_corpus;
};

// `dev` is in the forward direction; the reverse model is scored on it
// flipped. Bitext tags and origins are kept in the mixes.
BtKdResult iterate_bt_kd(const Model& fwd, const Model& bwd, const ParallelCorpus& bitext,
                         const std::vector<TokenSequence>& mono_x, const std::vector<TokenSequence>& mono_y,
                         const std::vector<SentencePair>& dev, const BtKdConfig& cfg, std::uint64_t seed);

// One epoch over the pairs of `full` whose origin is in `clean_origins`.
// Returns the number of epochs run.
std::size_t finetune_clean_subset(Model& model, const ParallelCorpus& full, const std::set<std::string>& clean_origins,
                                  std::size_t batch_size, const num::AdamConfig& adam, num::Rng& rng);

// Translations of every test source by every model, plus as many pairs
// sampled from `b1` (without replacement when it is large enough).
ParallelCorpus build_speculation_set(const std::vector<const Model*>& models,
                                     const std::vector<TokenSequence>& test_sources,
                                     const std::vector<SentencePair>& b1, const BeamConfig& beam, num::Rng& rng);

struct EarlyStopResult {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;       // 0 means the starting model
  std::vector<double> dev_bleu;     // [0] before tuning
};

// Fine-tunes until dev BLEU first drops, then restores the best epoch.
EarlyStopResult finetune_early_stop(Model& model, const std::vector<SentencePair>& data,
                                    const std::vector<SentencePair>& dev, std::size_t max_epochs,
                                    std::size_t batch_size, const num::AdamConfig& adam, const BeamConfig& beam,
                                    num::Rng& rng);

}  // namespace nmt::pipeline
