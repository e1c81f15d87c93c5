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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nmt/numerics/adam.h"
#include "nmt/seq2seq/beam.h"
#include "nmt/seq2seq/training.h"

namespace nmt::madl {

// Throws unless every weight is >= 0 and they sum to 1 within 1e-9.
void validate_weights(std::span<const double> weights);

// N same-direction translation models with simplex weights. Only models[0]
// is ever trained.
struct AgentEnsemble {
  std::vector<Model*> models;
  std::vector<double> weights;

  void validate() const;
  Model& primary() const { return *models.front(); }
  std::size_t size() const { return models.size(); }
};

AgentEnsemble equal_weights(std::vector<Model*> models);

// sum_i w_i log P(token | source, prefix; model_i). Not renormalised.
std::vector<double> combined_logprob(const AgentEnsemble& ens, std::span<const EncodedSource> encoded,
                                     std::span<const int> prefix);
std::vector<double> combined_logprob(const AgentEnsemble& ens, std::span<const int> source,
                                     std::span<const int> prefix);
std::vector<Hypothesis> combined_decode(const AgentEnsemble& ens, std::span<const int> source, const BeamConfig& cfg);
// Best hypothesis per source, parallel over sentences.
std::vector<TokenSequence> combined_translate_all(const AgentEnsemble& ens, const std::vector<TokenSequence>& sources,
                                                  const BeamConfig& cfg);

struct Corpora {
  std::vector<SentencePair> bitext;  // (x, y)
  std::vector<TokenSequence> mono_x;
  std::vector<TokenSequence> mono_y;
};

// Monolingual sentences paired with their combined-model translations:
// src = decoded, tgt = original. Term (c) uses (F(x), x), term (d) (G(y), y).
struct PseudoPairs {
  std::vector<SentencePair> x_from_fy;
  std::vector<SentencePair> y_from_gx;
};

PseudoPairs decode_mono(const AgentEnsemble& f, const AgentEnsemble& g, const std::vector<TokenSequence>& mono_x,
                        const std::vector<TokenSequence>& mono_y, const BeamConfig& cfg);

struct Terms {
  num::NodeId bitext_f;        // (a) mean -log P(y|x; f0)
  num::NodeId bitext_g;        // (b) mean -log P(x|y; g0)
  num::NodeId reconstruct_x;   // (c) beta0 * mean -log P(x | F(x); g0)
  num::NodeId reconstruct_y;   // (d) alpha0 * mean -log P(y | G(y); f0)
  num::NodeId total;
};

// Builds the objective for one mini-batch. Empty pseudo batches drop their
// term; the bitext batch must be non-empty.
Terms loss_terms(num::Graph& g, const AgentEnsemble& f, const AgentEnsemble& gens, std::span<const SentencePair> bitext,
                 std::span<const SentencePair> x_from_fy, std::span<const SentencePair> y_from_gx,
                 const ForwardOptions& fopt = {}, const ForwardOptions& gopt = {});

// Decodes the monolingual sets and builds the full-corpus objective.
Terms loss(num::Graph& g, const AgentEnsemble& f, const AgentEnsemble& gens, const Corpora& data,
           const BeamConfig& decode);

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 16;
  std::size_t mono_batch_size = 16;
  // Fraction of each monolingual set translated for the reconstruction terms.
  double mono_fraction = 1.0;
  // 0 translates once up front, otherwise every n epochs.
  std::size_t refresh_every_n_epochs = 0;
  BeamConfig decode{.beam = 1};
  num::AdamConfig adam;
};

struct TrainStats {
  std::size_t steps = 0;
  double last_loss = 0.0;
  std::size_t decodes = 0;
};

// Trains f.models[0] and g.models[0]. On a non-finite loss both are restored
// to their last finite state, `on_divergence` (if set) is called with them,
// and NumericError is thrown.
TrainStats train(const AgentEnsemble& f, const AgentEnsemble& g, const Corpora& data, const TrainConfig& cfg,
                 num::Rng& rng, const std::function<void(const Model&, const Model&)>& on_divergence = {});

// Ensemble manifest: one "weight<TAB>checkpoint-path" per line, '#' comments.
struct ManifestEntry {
  double weight;
  std::string path;
};
std::vector<ManifestEntry> parse_manifest(const std::string& text);

}  // namespace nmt::madl
