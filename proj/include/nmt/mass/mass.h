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

#include <array>
#include <span>
#include <vector>

#include "nmt/numerics/adam.h"
#include "nmt/seq2seq/model.h"
#include "nmt/seq2seq/training.h"

namespace nmt::mass {

// Masked fragment u..v (1-based, inclusive) of a sentence of length m.
// Sampled masks keep the first and last tokens: 1 < u < v < m.
struct MaskSpec {
  std::size_t u = 0, v = 0, m = 0;
  std::size_t k() const { return v - u + 1; }
  friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

struct MaskConfig {
  double ratio = 0.5;
};

MaskSpec sample_mask(std::size_t m, double ratio, num::Rng& rng);
// Masks every position; only valid with `strict = false` in apply_mask.
MaskSpec full_mask(std::size_t m);
bool is_strict(const MaskSpec& spec);

struct MaskedSentence {
  TokenSequence masked;
  TokenSequence fragment;
};

MaskedSentence apply_mask(std::span<const int> x, const MaskSpec& spec, bool strict = true);
TokenSequence reconstruct(std::span<const int> masked, std::span<const int> fragment, const MaskSpec& spec);

// Masked sequences joined with SEP into one encoder input.
TokenSequence concat_masked(std::span<const int> a, std::span<const int> b);

// -log P(fragment | encoder input). The fragment is fed with its original
// positions and has no EOS.
num::NodeId fragment_nll(num::Graph& g, const Model& model, std::span<const int> encoder_input,
                         std::span<const int> fragment, const MaskSpec& spec, const ForwardOptions& opt = {});

// Mean fragment NLL over the sentences of length >= 4; shorter ones are
// skipped with a warning. `masks`, if given, receives the sampled specs.
num::NodeId unsup_loss(num::Graph& g, const Model& model, std::span<const TokenSequence> batch, num::Rng& rng,
                       const MaskConfig& cfg = {}, const ForwardOptions& opt = {},
                       std::vector<MaskSpec>* masks = nullptr);

// The six supervised terms, each a batch mean of a negative log-likelihood:
//   0: y | x\m          1: x | y\m
//   2: x_frag | [x\m; y\m]   3: y_frag | [x\m; y\m]
//   4: y_frag | x\m     5: x_frag | y\m
struct SupervisedTerms {
  std::array<num::NodeId, 6> terms;
  num::NodeId total;
};
inline constexpr std::size_t kSupervisedTerms = 6;

SupervisedTerms sup_terms(num::Graph& g, const Model& model, std::span<const SentencePair> batch, num::Rng& rng,
                          const MaskConfig& cfg = {}, const ForwardOptions& opt = {});
num::NodeId sup_loss(num::Graph& g, const Model& model, std::span<const SentencePair> batch, num::Rng& rng,
                     const MaskConfig& cfg = {}, const ForwardOptions& opt = {});

double unsup_step(Model& model, num::Adam& adam, std::span<const TokenSequence> batch, num::Rng& rng,
                  const MaskConfig& cfg = {});
double sup_step(Model& model, num::Adam& adam, std::span<const SentencePair> batch, num::Rng& rng,
                const MaskConfig& cfg = {});

// Alternating unsupervised steps over both monolingual corpora with one
// shared model; returns the mean loss of the last pass.
double pretrain(Model& model, num::Adam& adam, const std::vector<TokenSequence>& mono_x,
                const std::vector<TokenSequence>& mono_y, std::size_t steps, std::size_t batch_size, num::Rng& rng,
                const MaskConfig& cfg = {});

}  // namespace nmt::mass
