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
#include <vector>

#include "nmt/seq2seq/model.h"

namespace nmt {

struct Hypothesis {
  TokenSequence tokens;  // without EOS
  double logprob = 0.0;  // includes the EOS term when finished
  double score = 0.0;    // logprob / length^length_penalty
  bool finished = false;
};

struct BeamConfig {
  std::size_t beam = 5;
  double length_penalty = 1.0;
  // Maximum tokens per hypothesis before the closing EOS; 0 picks 2 * |source| + 10 capped by the model.
  std::size_t max_len = 0;
};

// log P(next | prefix) over the target vocabulary.
using StepScorer = std::function<std::vector<double>(std::span<const int> prefix)>;

// Returns up to `beam` hypotheses, best first. Ties are broken by token id,
// then by parent rank, so results are deterministic.
std::vector<Hypothesis> beam_search(const StepScorer& scorer, const BeamConfig& cfg);
std::vector<Hypothesis> beam_search(const Model& model, std::span<const int> source, const BeamConfig& cfg);

// Best hypothesis tokens.
TokenSequence translate(const Model& model, std::span<const int> source, const BeamConfig& cfg);
// Parallel over sentences.
std::vector<TokenSequence> translate_all(const Model& model, const std::vector<TokenSequence>& sources,
                                         const BeamConfig& cfg);
std::vector<std::vector<Hypothesis>> nbest_all(const Model& model, const std::vector<TokenSequence>& sources,
                                               const BeamConfig& cfg);

std::size_t auto_max_len(const Model& model, std::size_t source_len);
bool banned_in_output(int id);

}  // namespace nmt
